"""Scratch: check witness generation against the paper's printed fixtures."""
import numpy as np
from fractions import Fraction

from entstruct import (
    LocalDims, StructureClass, gamma_max, generate_witness, make_state,
    maximally_mixed, noise_threshold, white_noise, evaluate,
)

qb = LocalDims.qubits


def show(name, w, psi=None):
    nz = {i + 1: w.alpha[i] for i in np.nonzero(w.alpha)[0]}
    print(f"{name}: c={w.multiplier} sum(alpha)={w.alpha.sum()} nonzeros={nz}")
    if psi is not None:
        t = noise_threshold(w, psi, maximally_mixed(w.dims))
        print(f"   threshold = {t}")
    return w


print("== III.B worked example (3 qubits, prod:2) ==")
w = generate_witness([(2, 3), (2, 5), (3, 5)], StructureClass.parse("prod:2"), qb(3))
show("3q prod2", w)
expect = np.array([1, .5, .5, .5, .5, .5, .5, 0])
print("   matches printed alpha:", np.array_equal(w.alpha, expect))

print("\n== Example 1: W4 ==")
w4 = make_state("w", 4)
P1 = [(2, 3), (2, 5), (2, 9), (3, 5), (3, 9), (5, 9)]
wv = show("W4 prod:2", generate_witness(P1, StructureClass.parse("prod:2"), qb(4)), w4)
exp2 = np.zeros(16); exp2[0] = 2
for i in (2, 3, 4, 5, 6, 7, 9, 10, 11, 13): exp2[i - 1] = .5
print("   matches printed W_2-prod:", np.array_equal(wv.alpha, exp2))
wv = show("W4 part:3", generate_witness(P1, StructureClass.parse("part:3"), qb(4)), w4)
print("   matches printed (same alpha):", np.array_equal(wv.alpha, exp2))
wv = show("W4 prod:3", generate_witness(P1, StructureClass.parse("prod:3"), qb(4)), w4)
exp3 = np.zeros(16); exp3[0] = 2
for i in (2, 3, 5, 9): exp3[i - 1] = 1
for i in (4, 6, 7, 10, 11, 13): exp3[i - 1] = .5
print("   matches printed W_3-prod:", np.array_equal(wv.alpha, exp3))
show("W4 fullsep", generate_witness(P1, StructureClass.parse("fullsep", 4), qb(4)), w4)
print("   expect thresholds: fullsep 1/5, prod:2 7/23, prod:3 9/17")

print("\n== Example 4: GHZ6, P={(1,64)} ==")
g6 = make_state("ghz", 6)
for spec, expect_t in [("prod:1", "1/33"), ("prod:2", "5/37"), ("prod:3", "15/47"),
                       ("prod:4", "25/57"), ("prod:5", "31/63")]:
    wv = show(f"GHZ6 {spec}", generate_witness([(1, 64)], StructureClass.parse(spec), qb(6)), g6)
    print(f"   expect {expect_t}")
wv = show("GHZ6 part:5 fixed_rhs",
          generate_witness([(1, 64)], StructureClass.parse("part:5"), qb(6), mode="fixed_rhs"), g6)
exp5p = np.zeros(64)
for i in (2, 3, 5, 9, 17, 32, 33, 48, 56, 60, 62, 63): exp5p[i - 1] = .5
print("   matches printed W_5-part:", np.array_equal(wv.alpha, exp5p), "(expect c=4)")

print("\n== Example 3: CL5s ==")
c5 = make_state("cl5s")
P3 = [(1, 16), (1, 20), (1, 29), (16, 20), (16, 29), (20, 29)]
for spec, expect_t in [("fullsep", "1/9"), ("part:4", "5/29"), ("part:3", "9/25"), ("part:2", "13/29")]:
    wv = show(f"CL5s {spec}", generate_witness(P3, StructureClass.parse(spec, 5), qb(5)), c5)
    print(f"   expect {expect_t}")
wv = show("CL5s prod:2 on P2={(1,16)}",
          generate_witness([(1, 16)], StructureClass.parse("prod:2"), qb(5)), c5)
print("   expect 3/11 (paper alpha at 4,6,7,10,11,13)")
