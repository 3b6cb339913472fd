"""K^m-valued atomic measures on finite point sets."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class FiniteVectorMeasure:
    """Atoms ``{point id: vector in K^m}``; K is complex if any atom is."""

    atoms: dict = field(default_factory=dict)
    dim: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("fiber dimension must be at least 1")
        clean = {}
        for k, v in self.atoms.items():
            v = np.atleast_1d(np.asarray(v))
            if v.shape != (self.dim,):
                raise ValueError(f"atom {k!r} has shape {v.shape}, expected ({self.dim},)")
            clean[int(k)] = v
        self.atoms = clean

    @property
    def is_complex(self) -> bool:
        return any(np.iscomplexobj(v) for v in self.atoms.values())

    def __add__(self, other: "FiniteVectorMeasure") -> "FiniteVectorMeasure":
        if other.dim != self.dim:
            raise ValueError("fiber dimensions differ")
        out = dict(self.atoms)
        for k, v in other.atoms.items():
            out[k] = out[k] + v if k in out else v
        return FiniteVectorMeasure(out, self.dim)

    def scale(self, c) -> "FiniteVectorMeasure":
        return FiniteVectorMeasure({k: c * v for k, v in self.atoms.items()}, self.dim)

    def to_dict(self) -> dict:
        cplx = self.is_complex
        atoms = {}
        for k, v in sorted(self.atoms.items()):
            atoms[str(k)] = [[float(z.real), float(z.imag)] for z in v] if cplx else [float(z) for z in v]
        return {"dim": self.dim, "complex": cplx, "atoms": atoms}

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteVectorMeasure":
        atoms = {}
        for k, v in d["atoms"].items():
            a = np.asarray(v, dtype=float)
            atoms[int(k)] = a[:, 0] + 1j * a[:, 1] if d.get("complex") else a
        return cls(atoms, int(d["dim"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FiniteVectorMeasure":
        return cls.from_dict(json.loads(text))


def total_variation(nu: FiniteVectorMeasure) -> float:
    """|nu|(X) = sum of atom norms; the partition supremum is attained by singletons."""
    return float(sum(np.linalg.norm(v) for v in nu.atoms.values()))


def complex_to_real(nu: FiniteVectorMeasure) -> FiniteVectorMeasure:
    """C^m -> R^{2m}, atom z -> (Re z, Im z)."""
    return FiniteVectorMeasure({k: np.concatenate([np.real(v), np.imag(v)]).astype(float)
                                for k, v in nu.atoms.items()}, 2 * nu.dim)


def real_to_complex(nu: FiniteVectorMeasure) -> FiniteVectorMeasure:
    if nu.dim % 2:
        raise ValueError("real dimension must be even")
    m = nu.dim // 2
    return FiniteVectorMeasure({k: v[:m] + 1j * v[m:] for k, v in nu.atoms.items()}, m)


def polar_decomposition_measure(nu: FiniteVectorMeasure):
    """(|nu| as {id: mass}, sigma as {id: unit vector}); zero atoms are dropped."""
    mass, sigma = {}, {}
    for k, v in nu.atoms.items():
        n = float(np.linalg.norm(v))
        if n > 0:
            mass[k] = n
            sigma[k] = v / n
    return mass, sigma


def pairing(f: dict, nu: FiniteVectorMeasure) -> complex:
    """sum over atoms of (f(x), nu({x})), conjugate-linear in f."""
    return complex(sum(np.vdot(np.asarray(f[k]), v) for k, v in nu.atoms.items() if k in f))
