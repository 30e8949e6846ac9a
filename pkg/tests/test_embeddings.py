import math

from pytest import mark, raises
from sympy import Matrix

from apfree_app.services.algebra.fields import rank_mod_p
from apfree_app.services.embeddings import (
    EmbeddingCertificate,
    RelationLattice,
    relabel_support,
    smith_normal_form,
    universal_finite_embedding,
    verify_certificate,
    z_embedding,
)
from apfree_app.services.progressions.aps import restricted_ap_distribution
from apfree_app.utils.errors import PreconditionError

DIAGONAL = ((0, 0, 0), (1, 1, 1))


@mark.parametrize("p", [5, 7])
def test_progressions_do_not_embed_in_z(p):
    report = z_embedding(restricted_ap_distribution(p))
    assert not report.nontrivial
    assert report.kernel_dimension == report.trivial_dimension == 2
    assert report.to_dict()['certificate'] is None


def test_diagonal_support_embeds_in_z():
    report = z_embedding(DIAGONAL, (2, 2, 2))
    assert report.nontrivial
    assert not report.certificate.trivial
    assert verify_certificate(report.certificate, DIAGONAL)


def test_alphabet_sizes_are_inferred():
    report = z_embedding(DIAGONAL)
    assert report.kernel_dimension == 4


def test_universal_group_of_p5_progressions():
    result = universal_finite_embedding(restricted_ap_distribution(5))
    assert result.torsion == (5,)
    assert result.free_rank == 2
    assert result.universal is not None
    assert not result.universal.trivial
    assert all(verify_certificate(cert, restricted_ap_distribution(5)) for cert in result.generators)


def test_torsion_free_support_has_no_universal_certificate():
    result = universal_finite_embedding(DIAGONAL, (2, 2, 2))
    assert result.torsion == ()
    assert result.universal is None
    assert result.free_rank == 4


@mark.parametrize("support, sizes", [
    (tuple(atom for atom, _ in restricted_ap_distribution(5).atoms), (5, 5, 5)),
    (DIAGONAL, (2, 2, 2)),
    (((0, 0), (1, 1), (0, 1)), (2, 2)),
])
@mark.parametrize("m", [2, 3, 5, 7])
def test_modular_nullity_detects_torsion(support, sizes, m):
    lattice = RelationLattice(sizes, support)
    result = universal_finite_embedding(lattice)
    nullity = lattice.columns - rank_mod_p(lattice.rows(), m)
    assert (nullity > result.free_rank) == any(d % m == 0 for d in result.torsion)


def test_smith_normal_form_divisibility():
    snf = smith_normal_form([[2, 4, 4], [-6, 6, 12], [10, -4, -16]])
    assert snf.diagonal == [2, 6, 12]
    for a, b in zip(snf.diagonal, snf.diagonal[1:]):
        assert b % a == 0


def test_smith_normal_form_of_rank_deficient_matrix():
    snf = smith_normal_form([[2, 4], [1, 2]])
    assert snf.diagonal == [1, 0]


def test_broken_certificate_is_rejected():
    cert = EmbeddingCertificate('Z', ((0, 1), (0, 1), (0, 1)))
    assert not verify_certificate(cert, DIAGONAL)
    assert verify_certificate(EmbeddingCertificate('Z', ((0, 1), (0, 1), (0, -2))), DIAGONAL)


def test_certificate_round_trip():
    report = universal_finite_embedding(restricted_ap_distribution(5))
    cert = EmbeddingCertificate.from_dict(report.universal.to_dict())
    assert verify_certificate(cert, restricted_ap_distribution(5))


def test_relabeling_preserves_the_universal_group():
    support = restricted_ap_distribution(7).support
    moved = relabel_support(support, (1, 3, 5), (7, 7, 7))
    assert universal_finite_embedding(moved, (7, 7, 7)).torsion == (7,)
    assert math.prod(universal_finite_embedding(support).torsion) == 7


def test_lattice_needs_two_coordinates():
    with raises(PreconditionError):
        RelationLattice((3,), ((0,),))


@mark.parametrize("rows", [
    [[2, 4, 4], [-6, 6, 12], [10, -4, -16]],
    [[12, 6, 4], [3, 9, 6], [2, 16, 14]],
    [[0, -3], [5, 0], [7, 7]],
])
def test_smith_transforms_are_unimodular(rows):
    snf = smith_normal_form(rows)
    S, T = Matrix(snf.left), Matrix(snf.right)
    assert abs(S.det()) == 1
    assert abs(T.det()) == 1
    assert (S * Matrix(rows) * T).tolist() == snf.normal_form
    assert all(d >= 0 for d in snf.diagonal)
