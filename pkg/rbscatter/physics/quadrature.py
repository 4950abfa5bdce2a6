"""Composite Gauss-Legendre grids and product-integration convolution weights.

Functions living on ``[-R, R]`` are represented by their values at the nodes
of a composite Gauss-Legendre rule. Inside each panel the samples define a
Lagrange interpolant, so a convolution ``(K * A)(x)`` reduces to a weight
matrix acting on the samples. The panel containing the target ``x`` is split
at ``x`` before integrating, which keeps the kink of ``K(|x - xi|)`` on a
sub-interval boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

Kernel = Callable[[np.ndarray], np.ndarray]


def lagrange_basis(nodes: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate the Lagrange basis of ``nodes`` at ``points``; shape ``(len(points), len(nodes))``."""

    nodes = np.asarray(nodes, dtype=float)
    points = np.asarray(points, dtype=float)
    order = nodes.size
    diff = points[:, None] - nodes[None, :]
    spread = nodes[:, None] - nodes[None, :] + np.eye(order)
    denominators = np.prod(spread, axis=1)
    basis = np.empty((points.size, order))
    for k in range(order):
        basis[:, k] = np.prod(np.delete(diff, k, axis=1), axis=1) / denominators[k]
    return basis


@dataclass(frozen=True, eq=False)
class CompositeGaussLegendre:
    """Gauss-Legendre rule of fixed order on each panel of ``edges``."""

    edges: np.ndarray
    order: int
    reference_nodes: np.ndarray = field(init=False, repr=False)
    reference_weights: np.ndarray = field(init=False, repr=False)
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        edges = np.asarray(self.edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("panel edges must be strictly increasing")
        if self.order < 1:
            raise ValueError("quadrature order must be positive")
        ref_nodes, ref_weights = leggauss(self.order)
        centers = 0.5 * (edges[1:] + edges[:-1])
        halves = 0.5 * (edges[1:] - edges[:-1])
        nodes = (centers[:, None] + halves[:, None] * ref_nodes[None, :]).ravel()
        weights = (halves[:, None] * ref_weights[None, :]).ravel()
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "reference_nodes", ref_nodes)
        object.__setattr__(self, "reference_weights", ref_weights)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, halfwidth: float, panels: int, order: int) -> "CompositeGaussLegendre":
        return cls(edges=np.linspace(-halfwidth, halfwidth, panels + 1), order=order)

    @property
    def panel_count(self) -> int:
        return self.edges.size - 1

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def halfwidths(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] - self.edges[:-1])

    def integrate(self, values: np.ndarray) -> complex:
        """Integrate samples at the nodes over the whole interval."""

        return complex(np.dot(self.weights, values))

    def interpolate(self, values: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Evaluate the panelwise interpolant of node ``values`` at ``points`` (zero outside)."""

        points = np.atleast_1d(np.asarray(points, dtype=float))
        values = np.asarray(values)
        result = np.zeros(points.shape, dtype=complex)
        inside = (points >= self.edges[0]) & (points <= self.edges[-1])
        if not np.any(inside):
            return result
        panel = np.clip(np.searchsorted(self.edges, points[inside], side="right") - 1, 0, self.panel_count - 1)
        tau = (points[inside] - self.centers[panel]) / self.halfwidths[panel]
        basis = lagrange_basis(self.reference_nodes, tau)
        blocks = values.reshape(self.panel_count, self.order)[panel]
        result[inside] = np.einsum("tk,tk->t", basis, blocks)
        return result


class ProductIntegrator:
    """Convolution weights ``W[t, j]`` with ``(K * A)(x_t) = sum_j W[t, j] A(x_j)``.

    Geometry (sub-quadrature points, weights and Lagrange basis values) is
    computed once per target set; :meth:`matrix` only evaluates the kernel.
    """

    def __init__(self, grid: CompositeGaussLegendre, targets: np.ndarray, sub_order: int = 16) -> None:
        self.grid = grid
        self.targets = np.atleast_1d(np.asarray(targets, dtype=float))
        u, v = leggauss(sub_order)
        tau_off = np.concatenate([(u - 1.0) / 2.0, (u + 1.0) / 2.0])
        w_off = np.concatenate([v / 2.0, v / 2.0])
        centers = grid.centers
        halves = grid.halfwidths
        self._off_points = centers[:, None] + halves[:, None] * tau_off[None, :]
        self._off_weights = halves[:, None] * w_off[None, :]
        self._off_basis = lagrange_basis(grid.reference_nodes, tau_off)

        inside = (self.targets >= grid.edges[0]) & (self.targets <= grid.edges[-1])
        self._inside = np.flatnonzero(inside)
        own = np.clip(
            np.searchsorted(grid.edges, self.targets[self._inside], side="right") - 1,
            0,
            grid.panel_count - 1,
        )
        self._own = own
        tau_t = np.clip((self.targets[self._inside] - centers[own]) / halves[own], -1.0, 1.0)
        lower = -1.0 + (tau_t[:, None] + 1.0) * (u[None, :] + 1.0) / 2.0
        upper = tau_t[:, None] + (1.0 - tau_t[:, None]) * (u[None, :] + 1.0) / 2.0
        tau_own = np.concatenate([lower, upper], axis=1)
        w_own = np.concatenate(
            [(tau_t[:, None] + 1.0) / 2.0 * v[None, :], (1.0 - tau_t[:, None]) / 2.0 * v[None, :]],
            axis=1,
        )
        self._own_points = centers[own][:, None] + halves[own][:, None] * tau_own
        self._own_weights = halves[own][:, None] * w_own
        self._own_basis = lagrange_basis(grid.reference_nodes, tau_own.ravel()).reshape(
            self._inside.size, tau_own.shape[1], grid.order
        )

    def matrix(self, kernel: Kernel) -> np.ndarray:
        """Return the ``(targets, grid nodes)`` convolution matrix for ``kernel``."""

        displacement = self.targets[:, None, None] - self._off_points[None, :, :]
        weighted = kernel(displacement) * self._off_weights[None, :, :]
        blocks = np.einsum("tbr,rk->tbk", weighted, self._off_basis)
        if self._inside.size:
            own_disp = self.targets[self._inside][:, None] - self._own_points
            own_weighted = kernel(own_disp) * self._own_weights
            blocks[self._inside, self._own, :] = np.einsum("tr,trk->tk", own_weighted, self._own_basis)
        return blocks.reshape(self.targets.size, self.grid.size)


@lru_cache(maxsize=16)
def uniform_grid(halfwidth: float, panels: int, order: int) -> CompositeGaussLegendre:
    return CompositeGaussLegendre.uniform(halfwidth, panels, order)


@lru_cache(maxsize=16)
def node_integrator(halfwidth: float, panels: int, order: int, sub_order: int) -> ProductIntegrator:
    """Integrator whose targets are the grid nodes themselves (operator assembly)."""

    grid = uniform_grid(halfwidth, panels, order)
    return ProductIntegrator(grid, grid.nodes, sub_order)


__all__ = [
    "CompositeGaussLegendre",
    "Kernel",
    "ProductIntegrator",
    "lagrange_basis",
    "node_integrator",
    "uniform_grid",
]
