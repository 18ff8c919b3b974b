"""Rebuild a three-slope system from its graded part and its projected alien
derivations, one level at a time."""
import numpy as np

from qstokes import alien_targets, load_example, reconstruct_full

A = load_example("three_slope")
targets = alien_targets(A)
for (delta, idx), (p, D) in sorted(targets.entries.items()):
    print(f"level {delta} class {idx}: c = {p.rep:.4f}, |D| = {D.norm():.3e}")

R, reports = reconstruct_full(A.graded(), targets)
for rep in reports:
    print(f"level {rep['level']}: transfer {rep['transfer_shape']}, "
          f"condition {rep['condition']:.3e}, residual {rep['residual']:.2e}")
for delta in A.structure.levels():
    err = np.max(np.abs(R.level_coefficients(delta) - A.level_coefficients(delta)))
    print(f"level {delta} coefficient error: {err:.2e}")
