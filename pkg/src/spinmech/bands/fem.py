"""Plane-stress bilinear quadrilateral stiffness and mass assembly."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..elastic_modes import Material
from .mesh import Mesh

_G = 1.0 / np.sqrt(3.0)
_GAUSS_2x2 = [(-_G, -_G), (_G, -_G), (_G, _G), (-_G, _G)]
_XI = np.array([-1.0, 1.0, 1.0, -1.0])
_ETA = np.array([-1.0, -1.0, 1.0, 1.0])


class SingularElementError(ValueError):
    def __init__(self, element_id: int, detJ: float):
        super().__init__(f"element {element_id} has non-positive Jacobian ({detJ:.3e})")
        self.element_id = element_id


def plane_stress_matrix(material: Material) -> np.ndarray:
    E, nu = material.youngs_modulus, material.poisson_ratio
    return (E / (1.0 - nu**2)) * np.array(
        [[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, 0.5 * (1.0 - nu)]]
    )


def _shape(xi, eta):
    N = 0.25 * (1 + _XI * xi) * (1 + _ETA * eta)
    dN = np.stack([0.25 * _XI * (1 + _ETA * eta), 0.25 * _ETA * (1 + _XI * xi)])
    return N, dN  # (4,), (2, 4) derivatives wrt (xi, eta)


def element_matrices(xy: np.ndarray, D: np.ndarray, rho: float, thickness: float,
                    incompatible: bool = True):
    """Stiffness and consistent mass for a batch of quads, ``xy`` of shape (n_el, 4, 2).

    With ``incompatible`` the stiffness is enriched by the two bubble modes
    ``1 - xi^2`` and ``1 - eta^2`` (derivatives mapped with the centroid
    Jacobian) and statically condensed. This removes the shear locking of the
    plain bilinear element in bending-dominated parts such as thin bridges.

    Returns ``(ke, me, detJ_min)`` with ke, me of shape (n_el, 8, 8); dofs are
    ordered ``(u_x0, u_y0, u_x1, ...)``.
    """
    n_el = xy.shape[0]
    n_dof = 12 if incompatible else 8
    ke = np.zeros((n_el, n_dof, n_dof))
    me = np.zeros((n_el, 8, 8))
    det_min = np.full(n_el, np.inf)
    if incompatible:
        _, dN0 = _shape(0.0, 0.0)
        J0 = np.einsum("ak,ekb->eab", dN0, xy)
        det0 = J0[:, 0, 0] * J0[:, 1, 1] - J0[:, 0, 1] * J0[:, 1, 0]
        J0inv = _inv2(J0, det0)
    for xi, eta in _GAUSS_2x2:
        N, dN = _shape(xi, eta)
        J = np.einsum("ak,ekb->eab", dN, xy)  # (n_el, 2, 2)
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        det_min = np.minimum(det_min, det)
        dNxy = np.einsum("eab,bk->eak", _inv2(J, det), dN)  # (n_el, 2, 4)
        B = np.zeros((n_el, 3, n_dof))
        B[:, 0, 0:8:2] = dNxy[:, 0]
        B[:, 1, 1:8:2] = dNxy[:, 1]
        B[:, 2, 0:8:2] = dNxy[:, 1]
        B[:, 2, 1:8:2] = dNxy[:, 0]
        if incompatible:
            dP = np.array([[-2.0 * xi, 0.0], [0.0, -2.0 * eta]])  # d(bubble)/d(xi, eta)
            dPxy = np.einsum("eab,bk->eak", J0inv, dP) * (det0 / np.where(det > 0, det, 1.0))[:, None, None]
            B[:, 0, 8:12:2] = dPxy[:, 0]
            B[:, 1, 9:12:2] = dPxy[:, 1]
            B[:, 2, 8:12:2] = dPxy[:, 1]
            B[:, 2, 9:12:2] = dPxy[:, 0]
        w = (thickness * det)[:, None, None]
        ke += w * np.einsum("eia,ij,ejb->eab", B, D, B)
        Nm = np.zeros((2, 8))
        Nm[0, 0::2] = N
        Nm[1, 1::2] = N
        me += (rho * w) * (Nm.T @ Nm)[None]
    if incompatible:
        kaa = ke[:, 8:, 8:]
        kau = ke[:, 8:, :8]
        ke = ke[:, :8, :8] - np.einsum("eai,eab->eib", kau, np.linalg.solve(kaa, kau))
        ke = 0.5 * (ke + np.transpose(ke, (0, 2, 1)))
    return ke, me, det_min


def _inv2(J, det):
    safe = np.where(det > 0, det, 1.0)
    Jinv = np.empty_like(J)
    Jinv[:, 0, 0] = J[:, 1, 1] / safe
    Jinv[:, 1, 1] = J[:, 0, 0] / safe
    Jinv[:, 0, 1] = -J[:, 0, 1] / safe
    Jinv[:, 1, 0] = -J[:, 1, 0] / safe
    return Jinv


def assemble_plane_stress(mesh: Mesh, material: Material, thickness: float = 1.0,
                          *, incompatible: bool = True):
    """Global sparse ``(K, M)`` with two in-plane displacement dofs per node."""
    xy = mesh.nodes[mesh.elements]
    ke, me, det_min = element_matrices(
        xy, plane_stress_matrix(material), material.mass_density, thickness, incompatible
    )
    bad = np.nonzero(det_min <= 0)[0]
    if bad.size:
        raise SingularElementError(int(bad[0]), float(det_min[bad[0]]))
    dofs = np.empty((mesh.n_elements, 8), dtype=int)
    dofs[:, 0::2] = 2 * mesh.elements
    dofs[:, 1::2] = 2 * mesh.elements + 1
    rows = np.repeat(dofs, 8, axis=1).ravel()
    cols = np.tile(dofs, (1, 8)).ravel()
    n = 2 * mesh.n_nodes
    K = sp.csr_matrix((ke.ravel(), (rows, cols)), shape=(n, n))
    M = sp.csr_matrix((me.ravel(), (rows, cols)), shape=(n, n))
    return K, M
