"""
Abelian embeddings of a finite support.

An embedding into an Abelian group G assigns maps sigma_1, ..., sigma_k with
sum_j sigma_j(x_j) = 0 for every atom x. Embeddings into Z are the integer
kernel of the relation matrix R (one row per atom, one column per letter of each
alphabet); the universal finite embedding is the torsion of Z^N / rowspan(R).
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

from sympy import Matrix, ZZ
from sympy.matrices.normalforms import invariant_factors, smith_normal_decomp

from apfree_app.services.algebra.fields import rank_mod_p
from apfree_app.services.algebra.groups import FiniteAbelianGroup
from apfree_app.services.progressions.aps import TripleDistribution
from apfree_app.utils.errors import ConsistencyError, PreconditionError

logger = logging.getLogger(__name__)

CERTIFICATION_PRIMES = (1_000_003, 998_244_353, 2_147_483_647)


@dataclass(frozen=True)
class RelationLattice:
    """Relation matrix of a support in Sigma_1 x ... x Sigma_k."""
    alphabet_sizes: tuple
    support: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.alphabet_sizes)
        support = tuple(sorted({tuple(int(c) for c in atom) for atom in self.support}))
        if len(sizes) < 2:
            raise PreconditionError("embeddings need at least two coordinates")
        if not support:
            raise PreconditionError("support must be non-empty")
        for atom in support:
            if len(atom) != len(sizes) or any(not 0 <= c < s for c, s in zip(atom, sizes)):
                raise PreconditionError(f"atom {atom} outside the alphabets {sizes}")
        object.__setattr__(self, 'alphabet_sizes', sizes)
        object.__setattr__(self, 'support', support)

    @classmethod
    def from_distribution(cls, mu):
        return cls(mu.alphabet_sizes, mu.support)

    @property
    def arity(self):
        return len(self.alphabet_sizes)

    @property
    def offsets(self):
        offsets = [0]
        for size in self.alphabet_sizes:
            offsets.append(offsets[-1] + size)
        return tuple(offsets)

    @property
    def columns(self):
        return self.offsets[-1]

    def rows(self):
        offsets = self.offsets
        rows = []
        for atom in self.support:
            row = [0] * self.columns
            for block, letter in enumerate(atom):
                row[offsets[block] + letter] += 1
            rows.append(row)
        return rows

    def split(self, vector):
        """Cut a length-N vector into per-coordinate maps."""
        offsets = self.offsets
        return tuple(tuple(vector[offsets[j]:offsets[j + 1]]) for j in range(self.arity))


@dataclass(frozen=True)
class EmbeddingCertificate:
    """Maps sigma_j: Sigma_j -> target; target is 'Z' or a FiniteAbelianGroup."""
    target: object
    maps: tuple

    @property
    def trivial(self):
        """Every map is constant."""
        return all(len(set(values)) <= 1 for values in self.maps)

    def to_dict(self):
        target = 'Z' if self.target == 'Z' else self.target.to_dict()
        maps = [[list(v) if isinstance(v, tuple) else v for v in values] for values in self.maps]
        return {'target': target, 'maps': maps, 'trivial': self.trivial}

    @classmethod
    def from_dict(cls, data):
        if data['target'] == 'Z':
            return cls('Z', tuple(tuple(int(v) for v in values) for values in data['maps']))
        group = FiniteAbelianGroup(tuple(data['target']['cyclic_orders']))
        maps = tuple(tuple(group.reduce(v if isinstance(v, list) else [v]) for v in values)
                     for values in data['maps'])
        return cls(group, maps)


def _atoms(support):
    if isinstance(support, TripleDistribution):
        return support.support
    if isinstance(support, RelationLattice):
        return support.support
    return tuple(tuple(atom) for atom in support)


def verify_certificate(cert, support):
    """sum_j sigma_j(x_j) = 0 in the target for every atom."""
    for atom in _atoms(support):
        if len(atom) != len(cert.maps):
            return False
        try:
            values = [cert.maps[j][letter] for j, letter in enumerate(atom)]
        except IndexError:
            return False
        if cert.target == 'Z':
            if sum(values) != 0:
                return False
        else:
            total = cert.target.zero
            for value in values:
                total = cert.target.add(total, value)
            if any(total):
                return False
    return True


@dataclass
class ZEmbeddingReport:
    """Kernel data of the relation matrix over Q."""
    kernel_dimension: int
    trivial_dimension: int
    rational_rank: int
    modular_ranks: dict
    certificate: EmbeddingCertificate = None

    @property
    def nontrivial(self):
        return self.certificate is not None

    def to_dict(self):
        return {
            'kernel_dimension': self.kernel_dimension,
            'trivial_dimension': self.trivial_dimension,
            'rational_rank': self.rational_rank,
            'modular_ranks': {str(q): r for q, r in self.modular_ranks.items()},
            'nontrivial': self.nontrivial,
            'certificate': self.certificate.to_dict() if self.certificate else None,
        }


def _integral(vector):
    """Scale a rational vector to a primitive integer vector."""
    fractions = [Fraction(int(v.p), int(v.q)) for v in vector]
    scale = math.lcm(*(f.denominator for f in fractions))
    ints = [int(f * scale) for f in fractions]
    common = math.gcd(*ints)
    return [v // common for v in ints] if common else ints


def z_embedding(support, alphabet_sizes=None):
    """
    Decide whether the support admits a non-trivial embedding into Z.

    The trivial solutions (constant maps summing to zero) span k - 1 dimensions;
    a kernel of larger dimension yields a certificate, cleared to a primitive
    integer vector. The rational rank is certified against ranks modulo
    several large primes.
    """
    lattice = _lattice(support, alphabet_sizes)
    rows = lattice.rows()
    matrix = Matrix(rows)
    rank = matrix.rank()
    modular = {q: rank_mod_p(rows, q) for q in CERTIFICATION_PRIMES}
    if max(modular.values()) != rank:
        raise ConsistencyError(f"rational rank {rank} not certified by modular ranks {modular}")
    kernel = matrix.nullspace()
    report = ZEmbeddingReport(
        kernel_dimension=len(kernel),
        trivial_dimension=lattice.arity - 1,
        rational_rank=rank,
        modular_ranks=modular,
    )
    if len(kernel) != lattice.columns - rank:
        raise ConsistencyError("kernel dimension disagrees with rank-nullity")
    if len(kernel) <= report.trivial_dimension:
        return report
    for vector in kernel:
        maps = lattice.split(_integral(list(vector)))
        candidate = EmbeddingCertificate('Z', maps)
        if not candidate.trivial:
            if not verify_certificate(candidate, lattice):
                raise ConsistencyError("kernel vector failed certificate verification")
            report.certificate = candidate
            break
    if report.certificate is None:
        raise ConsistencyError("kernel exceeds the trivial space but every basis vector is block-constant")
    logger.info(f"Z-embedding found: kernel dimension {report.kernel_dimension}")
    return report


def _lattice(support, alphabet_sizes=None):
    if isinstance(support, RelationLattice):
        return support
    if isinstance(support, TripleDistribution):
        return RelationLattice.from_distribution(support)
    atoms = [tuple(atom) for atom in support]
    if alphabet_sizes is None:
        if not atoms:
            raise PreconditionError("support must be non-empty")
        alphabet_sizes = tuple(max(atom[j] for atom in atoms) + 1 for j in range(len(atoms[0])))
    return RelationLattice(tuple(alphabet_sizes), tuple(atoms))


@dataclass
class SmithDecomposition:
    """D = S A T with S, T unimodular and D diagonal, d_1 | d_2 | ..."""
    diagonal: list
    left: list
    right: list
    normal_form: list = field(default=None)


def _integer_rows(matrix):
    return [[int(x) for x in row] for row in matrix.tolist()]


def smith_normal_form(matrix):
    """D = S A T over ZZ, with the invariant factors made nonnegative."""
    a = Matrix(matrix)
    d, s, t = smith_normal_decomp(a, domain=ZZ)
    for i in range(min(d.shape)):
        if d[i, i] < 0:
            d[i, :] = -d[i, :]
            s[i, :] = -s[i, :]
    if s * a * t != d:
        raise ConsistencyError("Smith decomposition does not reproduce S A T = D")
    return SmithDecomposition(
        diagonal=[int(d[i, i]) for i in range(min(d.shape))],
        left=_integer_rows(s),
        right=_integer_rows(t),
        normal_form=_integer_rows(d),
    )


@dataclass
class UniversalEmbedding:
    """Z^N / rowspan(R) = Z^free_rank (+) torsion, with one certificate per torsion factor."""
    torsion: tuple
    free_rank: int
    generators: tuple
    universal: EmbeddingCertificate = None

    @property
    def group(self):
        return FiniteAbelianGroup(self.torsion)

    def to_dict(self):
        return {
            'torsion': list(self.torsion),
            'free_rank': self.free_rank,
            'generators': [cert.to_dict() for cert in self.generators],
            'universal': self.universal.to_dict() if self.universal else None,
        }


def universal_finite_embedding(support, alphabet_sizes=None):
    """
    Torsion of Z^N / rowspan(R) in invariant-factor form.

    With D = S R T, column i of T reduced mod d_i is annihilated by R mod d_i,
    giving an embedding into Z_{d_i} that is nonzero on torsion.
    """
    lattice = _lattice(support, alphabet_sizes)
    rows = lattice.rows()
    snf = smith_normal_form(rows)
    nonzero = [d for d in snf.diagonal if d]
    torsion_positions = [i for i, d in enumerate(snf.diagonal) if d > 1]
    torsion = tuple(snf.diagonal[i] for i in torsion_positions)

    reference = sorted(int(d) for d in invariant_factors(Matrix(rows), domain=ZZ) if abs(int(d)) > 1)
    if sorted(torsion) != reference:
        raise ConsistencyError(f"invariant factors {torsion} disagree with reference {tuple(reference)}")

    generators = []
    for i in torsion_positions:
        d = snf.diagonal[i]
        column = [snf.right[r][i] % d for r in range(lattice.columns)]
        group = FiniteAbelianGroup((d,))
        cert = EmbeddingCertificate(group, tuple(tuple((v,) for v in values) for values in lattice.split(column)))
        if not verify_certificate(cert, lattice):
            raise ConsistencyError(f"torsion generator for Z_{d} failed verification")
        generators.append(cert)

    universal = None
    if torsion:
        group = FiniteAbelianGroup(torsion)
        columns = [[snf.right[r][i] % snf.diagonal[i] for i in torsion_positions] for r in range(lattice.columns)]
        maps = lattice.split([tuple(c) for c in columns])
        universal = EmbeddingCertificate(group, maps)
        if not verify_certificate(universal, lattice):
            raise ConsistencyError("universal embedding failed verification")

    result = UniversalEmbedding(
        torsion=torsion,
        free_rank=lattice.columns - len(nonzero),
        generators=tuple(generators),
        universal=universal,
    )
    logger.info(f"Universal finite embedding: torsion {torsion}, free rank {result.free_rank}")
    return result


def relabel_support(support, shifts, alphabet_sizes):
    """Translate each coordinate alphabet: x_j -> x_j + c_j mod |Sigma_j|."""
    return tuple(tuple((c + s) % m for c, s, m in zip(atom, shifts, alphabet_sizes)) for atom in _atoms(support))
