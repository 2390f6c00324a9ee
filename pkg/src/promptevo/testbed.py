"""Builtin synthetic generator/evaluator pair.

Stands in for the real diffusion + classifier + embedding stack so the
whole pipeline runs at desk scale.  Latents are standard-normal vectors;
objectives are Gaussian bumps around distinct centers (bounded in (0,1]
like classifier probabilities, with genuine conflict between them);
prompt similarity is the cosine against a fixed anchor direction.

Genotype payloads encode the seed lineage rather than raw floats: the
initial seed plus every (strength, seed) mutation applied since.  The
latent is replayed from that chain on demand, which keeps payloads
byte-identical across independent implementations of the same recipe
(see PROTOCOL.md).

All evaluator outputs are rounded to 12 significant digits so the
in-process path and the wire path see exactly the same numbers.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import Genotype, PhenotypeRef
from .objectives import ContractViolation
from .rng import normals_at, round12

__all__ = [
    "TestbedSpec",
    "default_spec",
    "synth_generate",
    "synth_mutate",
    "synth_classify",
    "synth_similarity",
    "latent_of",
    "known_pareto_front",
    "known_front_latents",
    "TestbedWorker",
]


@dataclass(frozen=True)
class TestbedSpec:
    dim: int
    centers: tuple[tuple[float, ...], ...]
    sigma: float
    prompt_anchor: tuple[float, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if len(set(self.centers)) != len(self.centers):
            raise ValueError("centers must be pairwise distinct")
        for c in self.centers:
            if len(c) != self.dim:
                raise ValueError("center dimension mismatch")
        norm = math.sqrt(sum(a * a for a in self.prompt_anchor))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError("prompt_anchor must have unit norm")

    @property
    def q(self) -> int:
        return len(self.centers)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "centers": [list(c) for c in self.centers],
            "sigma": self.sigma,
            "prompt_anchor": list(self.prompt_anchor),
        }

    @classmethod
    def from_dict(cls, raw: Optional[Mapping]) -> "TestbedSpec":
        raw = dict(raw or {})
        q = int(raw.pop("q", 2))
        dim = int(raw.pop("dim", 2))
        base = default_spec(q=q, dim=dim)
        centers = raw.pop("centers", None)
        if centers is not None:
            centers = tuple(tuple(float(x) for x in c) for c in centers)
        else:
            centers = base.centers
        sigma = float(raw.pop("sigma", base.sigma))
        anchor = raw.pop("prompt_anchor", None)
        if anchor is not None:
            anchor = tuple(float(x) for x in anchor)
            n = math.sqrt(sum(a * a for a in anchor))
            if n == 0:
                raise ValueError("prompt_anchor must be non-zero")
            anchor = tuple(a / n for a in anchor)
        else:
            anchor = _default_anchor(centers)
        if raw:
            raise ValueError(f"unknown testbed keys: {sorted(raw)}")
        return cls(dim=dim, centers=centers, sigma=sigma, prompt_anchor=anchor)


def _default_anchor(centers) -> tuple[float, ...]:
    s = np.sum(np.asarray(centers, dtype=float), axis=0)
    if np.linalg.norm(s) < 1e-9:
        s = np.asarray(centers[0], dtype=float)
    return tuple(s / np.linalg.norm(s))


def default_spec(q: int = 2, dim: int = 2) -> TestbedSpec:
    """Default bump layout: Q=2 puts centers at +/- e1 (distance 2);
    Q>=3 spreads them on the unit circle in the first two coordinates."""
    if dim < 2:
        raise ValueError("default spec needs dim >= 2")
    if q == 2:
        c1 = (1.0,) + (0.0,) * (dim - 1)
        c2 = (-1.0,) + (0.0,) * (dim - 1)
        centers = (c1, c2)
    else:
        centers = []
        for k in range(q):
            a = math.pi / 2 + 2 * math.pi * k / q
            c = [round(math.cos(a), 12), round(math.sin(a), 12)] + [0.0] * (dim - 2)
            centers.append(tuple(c))
        centers = tuple(centers)
    return TestbedSpec(
        dim=dim, centers=centers, sigma=1.0, prompt_anchor=_default_anchor(centers)
    )


# --- genotype payload: seed-lineage chain ------------------------------

_HEAD = struct.Struct("<Q")      # initial seed
_STEP = struct.Struct("<dQ")     # (strength, seed) per mutation


def synth_generate(spec: TestbedSpec, seed: int) -> Genotype:
    return Genotype(payload=_HEAD.pack(seed), seed=seed)


def synth_mutate(spec: TestbedSpec, parent: Genotype, seed: int, strength: float) -> Genotype:
    if not (0.0 <= strength <= 1.0):
        raise ValueError("strength must be in [0, 1]")
    if strength == 0.0:
        # clone: genotype content unchanged
        return Genotype(payload=parent.payload, seed=seed)
    return Genotype(payload=parent.payload + _STEP.pack(strength, seed), seed=seed)


def latent_of(spec: TestbedSpec, genotype: Genotype) -> np.ndarray:
    """Replay the seed chain into the latent vector."""
    payload = genotype.payload
    if len(payload) < _HEAD.size or (len(payload) - _HEAD.size) % _STEP.size:
        raise ValueError("malformed testbed genotype payload")
    (seed0,) = _HEAD.unpack_from(payload, 0)
    z = np.array(normals_at(seed0, spec.dim))
    off = _HEAD.size
    while off < len(payload):
        strength, seed = _STEP.unpack_from(payload, off)
        eps = np.array(normals_at(seed, spec.dim))
        z = math.sqrt(1.0 - strength * strength) * z + strength * eps
        off += _STEP.size
    return z


# --- scoring -----------------------------------------------------------

def synth_classify(spec: TestbedSpec, z: np.ndarray) -> tuple[float, ...]:
    c = np.asarray(spec.centers, dtype=float)
    d2 = ((np.asarray(z, dtype=float) - c) ** 2).sum(axis=1)
    y = np.exp(-d2 / (2.0 * spec.sigma**2))
    return tuple(round12(float(v)) for v in y)


def synth_similarity(spec: TestbedSpec, z: np.ndarray) -> float:
    z = np.asarray(z, dtype=float)
    nz = float(np.linalg.norm(z))
    if nz == 0.0:
        return 0.0
    cos = float(np.dot(z, np.asarray(spec.prompt_anchor)) / nz)
    return round12(max(-1.0, min(1.0, cos)))


def known_front_latents(spec: TestbedSpec, resolution: int) -> np.ndarray:
    """Evenly spaced latent points on the segment between the two centers
    (the unconstrained Pareto set of the two-bump problem)."""
    if spec.q != 2:
        raise ValueError("known Pareto front is only available for the Q=2 spec")
    c1 = np.asarray(spec.centers[0], dtype=float)
    c2 = np.asarray(spec.centers[1], dtype=float)
    t = np.linspace(0.0, 1.0, resolution)
    return c1[None, :] + t[:, None] * (c2 - c1)[None, :]


def known_pareto_front(spec: TestbedSpec, resolution: int) -> list[tuple[float, ...]]:
    return [synth_classify(spec, z) for z in known_front_latents(spec, resolution)]


# --- contract implementation ------------------------------------------

def phenotype_id(payload: bytes) -> str:
    return "tb-" + hashlib.sha256(payload).hexdigest()[:16]


class TestbedWorker:
    """Implements both the generator and evaluator contracts in-process.

    Pure given seeds; safe for concurrent calls.  Phenotype handles map
    back to latents through an internal store keyed by payload hash.
    """

    def __init__(self, spec: Optional[TestbedSpec] = None):
        self.spec = spec or default_spec()
        self._latents: dict[str, np.ndarray] = {}

    def _mint(self, genotype: Genotype) -> PhenotypeRef:
        pid = phenotype_id(genotype.payload)
        self._latents[pid] = latent_of(self.spec, genotype)
        return PhenotypeRef(id=pid)

    # Generator contract
    def generate(self, prompt: str, seed: int) -> tuple[Genotype, PhenotypeRef]:
        g = synth_generate(self.spec, seed)
        return g, self._mint(g)

    def mutate(
        self, prompt: str, parent: Genotype, seed: int, strength: float
    ) -> tuple[Genotype, PhenotypeRef]:
        g = synth_mutate(self.spec, parent, seed, strength)
        return g, self._mint(g)

    # Evaluator contract
    def _latent(self, phenotype: PhenotypeRef) -> np.ndarray:
        try:
            return self._latents[phenotype.id]
        except KeyError:
            raise ContractViolation(f"unknown phenotype id {phenotype.id!r}") from None

    def evaluate(self, phenotype: PhenotypeRef, labels: Sequence[str]) -> tuple[float, ...]:
        if len(labels) != self.spec.q:
            raise ContractViolation(
                f"testbed scores {self.spec.q} labels, got {len(labels)}"
            )
        return synth_classify(self.spec, self._latent(phenotype))

    def embed_similarity(self, phenotype: PhenotypeRef, prompt: str) -> float:
        return synth_similarity(self.spec, self._latent(phenotype))
