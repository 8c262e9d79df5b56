"""Common shape of every witness: ``A``, the structure ``B``, ``psi: A -> B`` and an extender."""

from __future__ import annotations

from ..caps import Caps
from ..errors import InputError
from ..search import extend_to_automorphism
from ..structure import Morphism, Structure, check_morphism, induced_substructure


class Witness:
    """A structure ``B`` containing a copy ``psi(A)`` of ``A``.

    Subclasses implement :meth:`extend`, sending a partial automorphism of
    ``psi(A)`` to an automorphism of ``B`` containing it, and
    :meth:`project`, the map to the structure the layer was built over.
    """

    kind = "witness"

    def __init__(self, base: Structure, structure: Structure, psi: Morphism):
        self.base = base
        self.structure = structure
        self.psi = psi
        self._psi_image = frozenset(psi.mapping.values())

    @property
    def psi_image(self) -> frozenset:
        return self._psi_image

    def copy_of_base(self) -> Structure:
        """The substructure ``psi(A)`` of ``B``."""
        return induced_substructure(self.structure, self._psi_image)

    def validate_partial_automorphism(self, phi: Morphism) -> None:
        if not (phi.domain <= self._psi_image and phi.image <= self._psi_image):
            raise InputError("map is not inside the copy of the base structure")
        ok = check_morphism(phi, self.structure, self.structure, "partial-automorphism")
        if not ok:
            raise InputError(f"not a partial automorphism: {ok.violation}")

    def lift(self, p: Morphism) -> Morphism:
        """Transport a partial automorphism of ``A`` to ``psi(A)``."""
        return Morphism(p.perm, {self.psi(a): self.psi(b) for a, b in p.mapping.items()})

    def project(self, v):
        raise NotImplementedError

    def extend(self, phi: Morphism) -> Morphism:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(|A|={len(self.base)}, |B|={len(self.structure)})"


class SearchWitness(Witness):
    """A hand-supplied witness whose extensions come from backtracking search.

    The extension is the first automorphism found, so it is deterministic but
    carries no coherence guarantee.
    """

    kind = "search"

    def __init__(self, base: Structure, structure: Structure, psi: Morphism,
                 caps: Caps | None = None):
        ok = check_morphism(psi, base, structure, "embedding")
        if not ok:
            raise InputError(f"psi is not an embedding: {ok.violation}")
        super().__init__(base, structure, psi)
        self.caps = caps
        self._memo = {}

    def project(self, v):
        return v

    def extend(self, phi: Morphism) -> Morphism:
        try:
            return self._memo[phi]
        except KeyError:
            pass
        theta = extend_to_automorphism(self.structure, phi, self.caps)
        if theta is None:
            raise InputError("partial automorphism does not extend in the supplied structure")
        self._memo[phi] = theta
        return theta


def identity_witness(A: Structure) -> SearchWitness:
    """``A`` as a witness of itself (only useful when ``A`` is homogeneous enough)."""
    return SearchWitness(A, A, Morphism.identity(A.language, A.vertices))
