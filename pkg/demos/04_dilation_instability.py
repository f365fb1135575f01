"""The collapse mechanism: dilation scaling on the zero-mode family.

Concentrating a zero-mode state multiplies the attraction, Hartree and
field energies by lam while the (vanishing) kinetic term scales as
lam^2, so the total energy is exactly affine in lam.  Above the
family's critical coupling the slope is negative and the energy runs to
minus infinity; below it the slope is positive and dilation is
penalised.
"""

from magrhf import alpha_c_from_beta, beta_rank1_upper_bound, instability_scan, loss_yau

fam = loss_yau((0.0, 0.0, 1.0))
z = N = 1.0
_, beta = beta_rank1_upper_bound(z, N, fam)
ac = alpha_c_from_beta(beta)
print(f"rank-1 threshold for z = N = 1: alpha_c_ub = {ac:.6f}\n")

lambdas = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
for factor in (1.5, 0.5):
    alpha = factor * ac
    scan = instability_scan(z, N, alpha, lambdas, fam)
    regime = "UNSTABLE (collapse)" if scan.unstable else "stable"
    print(f"alpha = {factor} * alpha_c = {alpha:.4f}  ->  {regime}")
    print(f"  E(lam) = lam * ({scan.slope:+.6f}), eps* = {scan.epsilon_star}")
    for lam, e in zip(scan.lambdas, scan.energies):
        print(f"    lam = {lam:5.1f}:  E = {e:+.6f}")
    print()
