"""Walk through the two-slope example: formal gauge, sums, Stokes matrix and
the level-one alien derivation, checked against the closed forms."""
import numpy as np

from qstokes import (ThetaContext, alien_derivation, directional_sum, eval_sum, formal_gauge, load_example,
                     stokes_matrix, theta_eval)

A = load_example("estar")
q = A.q
print("q =", q, " slopes =", A.slopes)

# formal gauge: the (0,1) coefficients are -q^{n(n-1)/2}, a divergent series
F = formal_gauge(A, N=8).block(0, 1)
print("formal (0,1) coefficients:", np.round(F.coeffs[:, 0, 0].real, 1))

# directional sums in two directions and their difference at z = a
c, d, a = 1.3j, -1.0, 0.9 + 0.5j
Fc, Fd = directional_sum(A, c), directional_sum(A, d)
print("F_c(a)[0,1] =", eval_sum(Fc, a)[0, 1])
print("F_d(a)[0,1] =", eval_sum(Fd, a)[0, 1])
S = stokes_matrix(A, c, d, a)
print("Stokes entry:", S.value[0, 1])

# alien derivation at the class of 1 agrees with 1/theta at the basepoint
D = alien_derivation(A, 1.0)
b = complex(*D.diagnostics["basepoint"])
print("alien entry :", D.value.value[0, 1])
print("1/theta(b)  :", 1 / theta_eval(ThetaContext(q), b))
print("contour error estimate:", D.diagnostics.get("relative_error"))
