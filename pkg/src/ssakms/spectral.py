"""Spectral radii, the common Perron-Frobenius eigenvector and cylinder measures."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kgraph import KGraph, Path


class SpectralError(ValueError):
    pass


class CommonEigenvectorFailure(SpectralError):
    pass


@dataclass
class SpectralData:
    graph: KGraph
    B: list[np.ndarray]
    rho: np.ndarray
    x: np.ndarray
    residuals: list[float]
    iterations: int

    @property
    def xv(self) -> dict[str, float]:
        return dict(zip(self.graph.vertices, self.x.tolist()))

    def x_at(self, v: str) -> float:
        return float(self.x[self.graph.vertices.index(v)])

    def rho_pow(self, p) -> float:
        return float(np.prod([r ** int(n) for r, n in zip(self.rho, p)]))

    def measure_cylinder(self, lam: Path) -> float:
        """M(Z(lam)) = rho^(-d(lam)) x(s(lam))."""
        return self.x_at(lam.s) / self.rho_pow(lam.degree)

    def g_invariance(self, groupoid, elements=None, tol: float = 1e-10):
        """(True, None) when x(dom g) = x(cod g) for every element, else (False, g).

        With no elements given the automaton generators are used; they generate
        the groupoid, so this decides invariance for all of it.
        """
        if elements is None:
            elements = [groupoid.gen(a) for a in groupoid.aut.generators]
        for g in elements:
            if abs(self.x_at(g.dom) - self.x_at(g.cod)) >= tol:
                return False, g
        return True, None

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.graph.vertices),
            "rho": [float(r) for r in self.rho],
            "x": [float(v) for v in self.x],
            "residuals": [float(r) for r in self.residuals],
            "iterations": self.iterations,
        }


def compute_spectral(graph: KGraph, tol: float = 1e-13, max_iter: int = 1_000_000,
                     residual_tol: float = 1e-10) -> SpectralData:
    checks = graph.structural_checks()
    if not checks["strongly_connected"]:
        raise SpectralError("graph is not strongly connected")
    B = [graph.adjacency(i) for i in range(1, graph.k + 1)]
    n = len(graph.vertices)
    # the identity shift keeps the iteration aperiodic without moving eigenvectors
    S = sum(b.astype(float) for b in B) + np.eye(n)
    x = np.full(n, 1.0 / n)
    it = 0
    for it in range(1, max_iter + 1):
        y = S @ x
        y /= y.sum()
        if np.max(np.abs(y - x)) < tol:
            x = y
            break
        x = y
    else:
        raise CommonEigenvectorFailure(f"power iteration did not converge in {max_iter} steps")
    if np.min(x) <= 0:
        raise CommonEigenvectorFailure("eigenvector has a non-positive entry")
    rho = []
    residuals = []
    for b in B:
        ratio = (b @ x) / x
        r = float(np.dot(ratio, x))
        res = float(np.max(np.abs(b @ x - r * x)))
        if res > residual_tol * max(1.0, r):
            raise CommonEigenvectorFailure(f"B_i x is not a multiple of x (residual {res:.3g})")
        rho.append(r)
        residuals.append(res)
    if min(rho) <= 0:
        raise SpectralError("some colour has spectral radius zero")
    return SpectralData(graph, B, np.array(rho), x, residuals, it)


def log_rho(spec: SpectralData) -> list[float]:
    return [math.log(r) for r in spec.rho]
