"""Counter-based randomness primitives.

Every random quantity in the engine and the builtin testbed is a pure
function of (seed, counter).  This is what makes runs reproducible
independent of evaluation order, and what lets external workers in other
languages reproduce the builtin testbed bit-for-bit (the exact integer
recipe is frozen in PROTOCOL.md; do not change constants without bumping
the protocol version).
"""

import math

MASK64 = (1 << 64) - 1

# splitmix64 finalizer constants
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
# distinct odd multipliers used to fold words into the state
_FOLD_A = 0xC2B2AE3D27D4EB4F
_FOLD_B = 0x165667B19E3779F9


def mix64(z: int) -> int:
    """splitmix64 finalizer: a 64-bit avalanche permutation."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(run_seed: int, generation: int, birth_index: int) -> int:
    """Per-candidate seed from (run seed, generation, birth index).

    Pure; counter-based, so results do not depend on the order in which
    candidates are created.  Fields are folded through the avalanche
    permutation one at a time, which keeps distinct inputs from
    colliding for any realistic generation/index range.
    """
    if generation < 0 or birth_index < 0:
        raise ValueError("generation and birth_index must be >= 0")
    z = mix64((run_seed + _GOLDEN) & MASK64)
    z = mix64((z + generation * _FOLD_A) & MASK64)
    z = mix64((z + birth_index * _FOLD_B) & MASK64)
    return z


def u64_at(seed: int, index: int) -> int:
    """index-th raw 64-bit word of the stream rooted at seed."""
    return mix64((seed + (index + 1) * _GOLDEN) & MASK64)


def uniform_at(seed: int, index: int) -> float:
    """index-th uniform draw in (0, 1]."""
    return ((u64_at(seed, index) >> 11) + 1) * (2.0 ** -53)


def normal_at(seed: int, index: int) -> float:
    """index-th standard normal draw (Box-Muller over the uniform stream)."""
    pair = index >> 1
    u1 = uniform_at(seed, 2 * pair)
    u2 = uniform_at(seed, 2 * pair + 1)
    r = math.sqrt(-2.0 * math.log(u1))
    angle = 2.0 * math.pi * u2
    if index & 1:
        return r * math.sin(angle)
    return r * math.cos(angle)


def normals_at(seed: int, count: int, offset: int = 0) -> list[float]:
    return [normal_at(seed, offset + i) for i in range(count)]


def round12(x: float) -> float:
    """Round to 12 significant decimal digits.

    Applied to every real number the testbed evaluator emits, in-process
    or over the wire, so that both paths see literally the same floats.
    """
    if x == 0.0 or math.isinf(x) or math.isnan(x):
        return x
    return float(f"{x:.11e}")
