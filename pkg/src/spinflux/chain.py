"""Spin-1/2 Heisenberg chain between two thermal contacts.

Builds the chain pieces used everywhere else: the local-field Hamiltonian,
the isotropic nearest-neighbor exchange, bond-resolved energy-current
operators, and the spin-x contact operators at the chain ends.

Conventions (hbar = k_B = 1):

* ``H = H_loc + V`` with ``H_loc = sum_mu (field/2) sigma_z(mu)`` and
  ``V = exchange * sum_mu vec(sigma)(mu) . vec(sigma)(mu+1)``.
* The bond current ``J(mu) = i [V(mu,mu+1), H_loc(mu)]`` measures energy flow
  from site mu to site mu+1; its sign is validated downstream against the
  hotter-left configuration.
* Sites and bonds are 1-based; bond mu joins sites (mu, mu+1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .operators import Operator, commutator, embed, pauli, tensor

WEAK_EXCHANGE_RATIO = 0.1


@dataclass(frozen=True)
class ChainSpec:
    """Chain geometry and energy scales: n sites, local field, exchange coupling."""

    n: int
    field: float
    exchange: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"chain needs at least 2 sites, got n={self.n}")
        if not self.field > 0:
            raise ValueError(f"local field must be positive, got {self.field}")
        if self.exchange < 0:
            raise ValueError(f"exchange coupling must be >= 0, got {self.exchange}")
        if self.exchange > WEAK_EXCHANGE_RATIO * self.field:
            warnings.warn(
                f"exchange/field = {self.exchange / self.field:.3g} exceeds "
                f"{WEAK_EXCHANGE_RATIO}; the weak-internal-coupling generator "
                "assumes exchange << field",
                stacklevel=2,
            )

    @property
    def dim(self) -> int:
        return 2 ** self.n


def _check_site(spec: ChainSpec, site: int) -> None:
    if not 1 <= site <= spec.n:
        raise ValueError(f"site {site} out of range 1..{spec.n}")


def _check_bond(spec: ChainSpec, bond: int) -> None:
    if not 1 <= bond <= spec.n - 1:
        raise ValueError(f"bond {bond} out of range 1..{spec.n - 1}")


def build_local_hamiltonian_site(spec: ChainSpec, site: int) -> Operator:
    """(field/2) sigma_z at one site, embedded in the full chain."""
    _check_site(spec, site)
    return 0.5 * spec.field * embed(pauli("z"), site, spec.n)


def build_local_hamiltonian(spec: ChainSpec) -> Operator:
    """Sum of the per-site field terms."""
    total = build_local_hamiltonian_site(spec, 1)
    for site in range(2, spec.n + 1):
        total = total + build_local_hamiltonian_site(spec, site)
    return total


def build_bond(spec: ChainSpec, bond: int) -> Operator:
    """Exchange term on one bond: exchange * (xx + yy + zz) on sites (bond, bond+1)."""
    _check_bond(spec, bond)
    pair = np.zeros((4, 4), dtype=complex)
    for kind in ("x", "y", "z"):
        p = pauli(kind)
        pair += tensor(p, p).matrix
    return spec.exchange * embed(Operator(pair, hermitian=True), bond, spec.n)


def build_interaction(spec: ChainSpec) -> Operator:
    """Isotropic nearest-neighbor exchange over all bonds."""
    total = build_bond(spec, 1)
    for bond in range(2, spec.n):
        total = total + build_bond(spec, bond)
    return total


def build_hamiltonian(spec: ChainSpec) -> Operator:
    return build_local_hamiltonian(spec) + build_interaction(spec)


def build_current_operator(spec: ChainSpec, bond: int) -> Operator:
    """Energy-current operator for one bond: i [V(bond), H_loc(bond)]."""
    _check_bond(spec, bond)
    j = 1j * commutator(build_bond(spec, bond),
                        build_local_hamiltonian_site(spec, bond)).matrix
    return Operator(j, hermitian=True)


def build_coupling_operator(spec: ChainSpec, side: str) -> Operator:
    """Contact operator sigma_x at the first (left) or last (right) site."""
    if side == "left":
        site = 1
    elif side == "right":
        site = spec.n
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return embed(pauli("x"), site, spec.n)
