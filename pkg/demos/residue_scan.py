"""Scan the alien derivation over a grid of directions: it vanishes away from
the resonant class and is nonzero on it."""
import numpy as np

from qstokes import alien_derivation, load_example
from qstokes.errors import QStokesError

A = load_example("estar")
q = abs(A.q)
print(f"{'|c|':>8} {'arg c':>8} {'|Delta|':>12}")
for r in (1.0, q ** 0.25, q ** 0.5):
    for phi in np.linspace(0, 2 * np.pi, 8, endpoint=False):
        c = r * np.exp(1j * phi)
        try:
            D = alien_derivation(A, c)
            val = f"{D.value.norm():12.3e}"
        except QStokesError as exc:
            val = f"  {type(exc).__name__}"
        print(f"{r:8.4f} {phi:8.4f} {val}")
