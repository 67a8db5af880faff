import numpy as np
import pytest

import legendrelab as ll
from legendrelab.catalog import entries, entry
from legendrelab.classify import CHAIN
from legendrelab.generators import random_convex_1d, random_convex_2d


def test_halfsq2_all_verdicts_true():
    e = entry("halfsq2")
    rep = ll.classify(e.build(), e.dual_grid)
    assert all(v.verdict for v in rep.verdicts.values())
    assert rep.chain_ok


def test_fourth_root_well_report():
    """Essentially strictly convex and firmly subdifferentiable, yet not
    totally convex on its whole domain: the flat edge is the witness."""
    e = entry("fourth_root_well")
    rep = ll.classify(e.build(), e.dual_grid)
    t = rep.truth()
    assert t["essentially_strictly_convex"]
    assert t["essentially_firmly_subdifferentiable"]
    assert t["totally_convex_on_dom_subdiff"]
    assert not t["totally_convex_on_dom"]
    wit = rep.verdicts["totally_convex_on_dom"].witness
    assert abs(abs(wit["point"]["point"][1]) - 1.0) < 1e-9 or \
        abs(abs(wit["point"]["point"][0]) - 1.0) < 1e-9


def test_sqrt_well_report():
    """Not totally convex even on its subdifferential domain: corner witness."""
    e = entry("sqrt_well")
    rep = ll.classify(e.build(), e.dual_grid)
    t = rep.truth()
    assert t["essentially_strictly_convex"]
    assert t["essentially_firmly_subdifferentiable"]
    assert not t["totally_convex_on_dom_subdiff"]
    wit = rep.verdicts["totally_convex_on_dom_subdiff"].witness
    assert np.allclose(np.abs(wit["point"]["point"]), [1.0, 1.0])


@pytest.mark.parametrize("e", entries(), ids=lambda e: e.id)
def test_catalog_expected_verdicts(e):
    rep = ll.classify(e.build(), e.dual_grid)
    assert rep.truth() == e.expected_verdicts
    assert rep.chain_ok


def test_finite_dim_equivalence_on_catalog():
    """In finite dimension the strict and firm rungs coincide."""
    for e in entries():
        v = e.expected_verdicts
        assert (v["essentially_strictly_convex"]
                == v["essentially_firmly_subdifferentiable"]), e.id


def test_chain_on_random_convex_1d():
    rng = np.random.default_rng(3)
    g = ll.grid_1d(-2.0, 2.0, 151)
    d = ll.grid_1d(-3.0, 3.0, 121)
    for i in range(6):
        f = random_convex_1d(rng, g, strongly=bool(i % 2), boxed=(i % 3 == 0))
        rep = ll.classify(f, d)
        assert rep.chain_ok, f"chain broken on draw {i}"


def test_chain_on_random_convex_2d():
    rng = np.random.default_rng(4)
    g = ll.grid_2d(-2.0, 2.0, 41)
    d = ll.grid_2d(-3.0, 3.0, 41)
    for i in range(3):
        f = random_convex_2d(rng, g, strongly=bool(i % 2))
        rep = ll.classify(f, d)
        assert rep.chain_ok, f"chain broken on draw {i}"


def test_rint_total_matches_firm_verdict():
    """At relative-interior subdifferentiable points, totally-convex-at-x
    equals firmly-subdifferentiable-at-x."""
    from legendrelab.classify import _Session
    from legendrelab.tolerances import DEFAULT_TOLS

    for eid, probes in [("halfsq", [[-1.0], [0.0], [0.8]]),
                        ("abs", [[0.0], [0.5], [-1.2]]),
                        ("fourth_root_well", [[0.0, 0.0], [0.5, 0.5],
                                              [0.0, 0.975]])]:
        e = entry(eid)
        f = e.build()
        ses = _Session(f, e.dual_grid, ll.NormChoice.L2, DEFAULT_TOLS)
        for p in probes:
            x = f.grid.index_of_nearest(p)
            if not all(f.domain_flat[nb] for nb in f.grid.neighbors(x)):
                continue
            duals = ses.witness_duals(x, 8)
            if not duals:
                continue
            firm_at_x = all(ses.firm_positive(x, s)[0] for s in duals)
            total_at_x = ses.total_positive(x)[0]
            assert firm_at_x == total_at_x, (eid, p)


def test_lemma1_quadratic_all_true(halfsq_1d, dual_fine_1d):
    rep = ll.lemma1_agreement(halfsq_1d, dual_fine_1d, n_probes=20)
    assert rep.lsc_consistent
    assert len(rep.probes) >= 20
    for p in rep.probes:
        assert p.strong_minimum and p.conjugate_differentiable \
            and p.firm_certificate


def test_lemma1_abs_kink_probe(absval_1d, dual_fine_1d):
    """At s=0 the tilted |.| has a strong kink minimum; all legs true.

    Oracle for (a): the modulus is exactly t, a forcing curve.
    """
    s0 = dual_fine_1d.index_of_nearest([0.0])
    rep = ll.lemma1_agreement(absval_1d, dual_fine_1d, duals=[s0])
    p = rep.probes[0]
    assert p.strong_minimum and p.conjugate_differentiable and p.firm_certificate


def test_lemma1_flat_indicator_all_false():
    e = entry("box_indicator")
    f = e.build()
    s0 = e.dual_grid.index_of_nearest([0.0])
    rep = ll.lemma1_agreement(f, e.dual_grid, duals=[s0])
    p = rep.probes[0]
    assert not p.strong_minimum
    assert not p.conjugate_differentiable
    assert not p.firm_certificate
    assert p.agree


def test_lemma1_kink_tilt_three_way_false(absval_1d, dual_fine_1d):
    """At s=1 the tilted |.| flattens on a ray: every leg must go false."""
    s1 = dual_fine_1d.index_of_nearest([1.0])
    rep = ll.lemma1_agreement(absval_1d, dual_fine_1d, duals=[s1])
    p = rep.probes[0]
    assert not p.strong_minimum
    assert not p.conjugate_differentiable
    assert not p.firm_certificate


def test_lemma1_agreement_across_catalog():
    for eid in ("halfsq", "abs", "quartic", "exp", "neg_entropy",
                "box_indicator"):
        e = entry(eid)
        rep = ll.lemma1_agreement(e.build(), e.dual_grid, n_probes=24)
        assert len(rep.probes) >= 20
        assert not rep.disagreements, (eid, rep.disagreements)


def test_report_serialization_round_trip(tmp_path):
    e = entry("abs")
    rep = ll.classify(e.build(), e.dual_grid)
    from legendrelab.report_io import read_json, write_json
    path = tmp_path / "report.json"
    write_json(rep.to_dict(), path)
    doc = read_json(path)
    assert doc["kind"] == "classification_report"
    assert set(doc["verdicts"]) == set(rep.verdicts)
    assert doc["chain_ok"] == rep.chain_ok
    assert list(CHAIN)[0] in doc["verdicts"]
