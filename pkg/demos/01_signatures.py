"""Signatures of sampled curves: what the coefficients look like and what
augmentation changes."""
import numpy as np

from sigfss.signature import (
    FunctionalSample,
    path_signature,
    signature_matrix,
    signature_length,
    truncated_signature,
    truncation_for_budget,
    word_labels,
)

# a straight line from 0 to 1: level d is 1/d!
t = np.linspace(0, 1, 11)
line = FunctionalSample("line", t, t[:, None])
print(dict(zip(word_labels(1, 4), truncated_signature(line, 4).round(6).tolist())))

# a square loop in the plane; level 1 vanishes, the area shows up at level 2
square = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]], dtype=float)
sig = path_signature(square, 2)
for label, value in zip(word_labels(2, 2), sig):
    print(f"{label:>6} {value: .3f}")

# the plain signature ignores the clock and the starting level
values = np.sin(3 * t)[:, None]
a = truncated_signature(FunctionalSample("a", t, values), 3)
b = truncated_signature(FunctionalSample("a", t**2, values + 5.0), 3)
print("plain, warped+shifted:", np.abs(a - b).max())

# prepending a zero and appending time as a channel makes both visible
a = signature_matrix([FunctionalSample("a", t, values)], 3)[0]
b = signature_matrix([FunctionalSample("a", t**2, values + 5.0)], 3)[0]
print("augmented, warped+shifted:", np.abs(a - b).max())

# how deep we can go under a 10^4 coefficient budget
for p in (1, 2, 3):
    tr = truncation_for_budget(p)
    print(f"p={p}: order {tr.order}, {tr.length} coefficients (next order: {signature_length(p + 1, tr.order + 1)})")
