"""
Metrics on a product built from holomorphic 1-forms of the factors.

On T x T with dz on each factor, the Kaehler form

    omega = pr1* omega_1 + pr2* omega_2 + rho + conj(rho),   rho = i a dz1 ^ dzbar2

defines a metric exactly when |a| < 1/2.  The demo scans a, reports the
smallest eigenvalue (1 - 2|a| here), and recovers a from rho.

    python3 demos/product_metric.py
"""

import numpy as np

from almosthermitian import forms as fm
from almosthermitian.curvature import PositivityError, decompose_product_form, max_bisectional, product_metric
from almosthermitian.manifold import get_manifold

T = get_manifold("flat_torus")
PHI, PSI = [fm.dz(T)], [fm.dz(T)]
POINT = (1.0, 2.0, 3.0, 4.0)

if __name__ == "__main__":
    for a in (0.0, 0.3, 0.3j, 0.49, 0.5, 2.0):
        try:
            h = product_metric(T.metric(), T.metric(), [[a]], PHI, PSI, check_points=[POINT])
        except PositivityError as exc:
            print(f"a = {a!s:>6}: not a metric (smallest eigenvalue {exc.value:+.3f})")
            continue
        lam = np.linalg.eigvalsh(h.at(POINT)).min()
        dec = decompose_product_form(h.rho, PHI, PSI, [POINT], conjugate=True)
        top = max_bisectional(h, 10, seed=0)
        print(f"a = {a!s:>6}: smallest eigenvalue {lam:.3f}, recovered a = {dec.a[0, 0]:.3f}, "
              f"max bisectional {top:+.1e}, real parameters {h.parameter_count}")
