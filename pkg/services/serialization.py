"""JSON formats consumed and produced by the command line.

Every payload is validated by a pydantic model; ``to_domain`` converts it into
the numerical objects of the other services and the ``from_*`` constructors go
the other way. Output is dumped with sorted keys, so equal values produce
byte-identical documents.
"""
import json
import math
from typing import Any, List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from services.bundle import FramePoint, PiTrivialization, Trivialization
from services.delta import ComplementCertificate, DeltaPair
from services.errors import InvalidInput
from services.grassmann import Subspace
from services.operators import GlZOperator
from services.substrate import DEFAULT_TOLERANCES, CMatrix, Tolerances, as_cmatrix


class CMatrixModel(BaseModel):
    rows: int = Field(ge=0, description="Number of rows")
    cols: int = Field(ge=0, description="Number of columns")
    re: List[float] = Field(description="Real parts, row-major")
    im: List[float] = Field(description="Imaginary parts, row-major")

    @model_validator(mode="after")
    def _check_entries(self):
        expected = self.rows * self.cols
        if len(self.re) != expected or len(self.im) != expected:
            raise ValueError(f"Expected {expected} entries in re and im, got {len(self.re)} and {len(self.im)}")
        if not all(math.isfinite(x) for x in self.re + self.im):
            raise ValueError("Matrix entries must be finite")
        return self

    @classmethod
    def from_matrix(cls, A) -> "CMatrixModel":
        A = as_cmatrix(A)
        return cls(rows=A.shape[0], cols=A.shape[1],
                   re=A.real.ravel().tolist(), im=A.imag.ravel().tolist())

    def to_domain(self) -> CMatrix:
        values = np.asarray(self.re, dtype=float) + 1j * np.asarray(self.im, dtype=float)
        return values.reshape(self.rows, self.cols).astype(np.complex128)


class SubspaceModel(BaseModel):
    ambient_dim: int = Field(ge=1, description="Dimension n of the ambient space C^n")
    basis: CMatrixModel

    @model_validator(mode="after")
    def _check_rows(self):
        if self.basis.rows != self.ambient_dim:
            raise ValueError(f"Basis has {self.basis.rows} rows for ambient dimension {self.ambient_dim}")
        return self

    @classmethod
    def from_subspace(cls, S: Subspace) -> "SubspaceModel":
        return cls(ambient_dim=S.ambient_dim, basis=CMatrixModel.from_matrix(S.basis))

    def to_domain(self, tol: Tolerances = DEFAULT_TOLERANCES) -> Subspace:
        """Span of the given columns; the basis need not be orthonormal."""
        A = self.basis.to_domain()
        if A.shape[1] == 0:
            return Subspace(self.ambient_dim, A)
        S = Subspace.from_columns(A, tol)
        if S.dim != A.shape[1]:
            raise InvalidInput(f"Basis columns are dependent: rank {S.dim} < {A.shape[1]}")
        return S


class GlZOperatorModel(BaseModel):
    matrix: CMatrixModel
    invariant_space: SubspaceModel

    @classmethod
    def from_operator(cls, G: GlZOperator) -> "GlZOperatorModel":
        return cls(matrix=CMatrixModel.from_matrix(G.matrix),
                   invariant_space=SubspaceModel.from_subspace(G.invariant_space))

    def to_domain(self, tol: Tolerances = DEFAULT_TOLERANCES) -> GlZOperator:
        return GlZOperator.checked(self.matrix.to_domain(), self.invariant_space.to_domain(tol), tol)


class FramePointModel(BaseModel):
    z: SubspaceModel
    g: CMatrixModel
    k: CMatrixModel

    @classmethod
    def from_frame(cls, f: FramePoint) -> "FramePointModel":
        return cls(z=SubspaceModel.from_subspace(f.z),
                   g=CMatrixModel.from_matrix(f.g.matrix), k=CMatrixModel.from_matrix(f.k.matrix))

    def to_domain(self, tol: Tolerances = DEFAULT_TOLERANCES) -> FramePoint:
        return FramePoint.checked(self.z.to_domain(tol), self.g.to_domain(), self.k.to_domain(), tol)


class PairModel(BaseModel):
    s: SubspaceModel
    t: SubspaceModel
    witness: Optional[SubspaceModel] = None

    @classmethod
    def from_pair(cls, pair: DeltaPair) -> "PairModel":
        witness = SubspaceModel.from_subspace(pair.witness) if pair.witness is not None else None
        return cls(s=SubspaceModel.from_subspace(pair.s), t=SubspaceModel.from_subspace(pair.t), witness=witness)

    def to_domain(self, tol: Tolerances = DEFAULT_TOLERANCES) -> DeltaPair:
        witness = self.witness.to_domain(tol) if self.witness is not None else None
        return DeltaPair(self.s.to_domain(tol), self.t.to_domain(tol), witness)


class CertificateModel(BaseModel):
    z: SubspaceModel
    margin_s: float
    margin_t: float
    method: str
    seed: int

    @classmethod
    def from_certificate(cls, cert: ComplementCertificate) -> "CertificateModel":
        return cls(z=SubspaceModel.from_subspace(cert.z), margin_s=cert.margin_s, margin_t=cert.margin_t,
                   method=cert.method.value, seed=cert.seed)


class TrivializationModel(BaseModel):
    """The five coordinates (S, T, u, a, b) of a frame over Δ^{Z0}."""
    s: SubspaceModel
    t: SubspaceModel
    u: SubspaceModel
    a: CMatrixModel
    b: CMatrixModel

    @classmethod
    def from_trivialization(cls, triv: Trivialization) -> "TrivializationModel":
        return cls(s=SubspaceModel.from_subspace(triv.pair.s), t=SubspaceModel.from_subspace(triv.pair.t),
                   u=SubspaceModel.from_subspace(triv.u),
                   a=CMatrixModel.from_matrix(triv.a), b=CMatrixModel.from_matrix(triv.b))

    def to_domain(self, tol: Tolerances = DEFAULT_TOLERANCES) -> Trivialization:
        pair = DeltaPair(self.s.to_domain(tol), self.t.to_domain(tol))
        return Trivialization(pair, self.u.to_domain(tol), self.a.to_domain(), self.b.to_domain())


class PiTrivializationModel(BaseModel):
    base: SubspaceModel
    g: CMatrixModel
    k: CMatrixModel

    @classmethod
    def from_pi_trivialization(cls, triv: PiTrivialization) -> "PiTrivializationModel":
        return cls(base=SubspaceModel.from_subspace(triv.base),
                   g=CMatrixModel.from_matrix(triv.g), k=CMatrixModel.from_matrix(triv.k))


def dumps(payload: Any) -> str:
    """Canonical JSON text: pydantic models are dumped first, keys sorted."""
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return json.dumps(payload, sort_keys=True, ensure_ascii=False)
