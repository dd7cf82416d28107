import json
import math

import pytest

import datagrid as dg


@pytest.fixture(scope="module")
def planted():
    variables = [("a", "categorical", 2, 3), ("x", "numerical", 2, 0)]
    return dg.generate_planted(variables, n_records=2000, noise=0.05, seed=4)


@pytest.fixture(scope="module")
def report(planted):
    dataset, _ = planted
    return dg.train(dataset, seed=1, vns_rounds=4)


def test_toy_null_cost(tmp_path):
    path = tmp_path / "toy.tsv"
    path.write_text("u\tw\na\tx\nb\ty\n")
    ds = dg.load_table(str(path), [("u", "categorical"), ("w", "categorical")])
    assert ds.n_records == 2
    c = dg.cost(dg.null_model(ds))
    assert c.total == pytest.approx(4 * math.log(2) + 2 * math.log(3), abs=1e-9)


def test_load_errors(tmp_path):
    with pytest.raises(Exception):
        dg.load_table(str(tmp_path / "nope.tsv"), [("u", "categorical"), ("w", "categorical")])
    with pytest.raises(ValueError):
        dg.load_table(str(tmp_path / "nope.tsv"), [("u", "weird"), ("w", "categorical")])


def test_recovers_planted(planted, report):
    _, truth = planted
    model = report.best_model
    assert report.best_cost < report.null_cost
    assert model.part_counts == [2, 2]
    for k in range(2):
        assert dg.recovery_ari(model, truth, k) == pytest.approx(1.0)


def test_training_is_deterministic(planted, report):
    dataset, _ = planted
    again = dg.train(dataset, seed=1, vns_rounds=4, threads=2)
    assert again.best_cost == report.best_cost
    assert [again.best_model.partition(k) for k in range(2)] == [report.best_model.partition(k) for k in range(2)]


def test_hierarchy_endpoints(report):
    h = dg.build_hierarchy(report.best_model)
    assert len(h.records) == report.best_model.total_parts - 2
    assert h.info_ratio_after(0) == 1.0
    assert h.records[-1]["info_ratio"] == 0.0
    end = h.model_after(len(h.records))
    assert dg.cost(end).total == pytest.approx(h.cost_null, abs=1e-9)
    assert h.model_at(info_ratio=1.0).part_counts == report.best_model.part_counts
    assert h.model_at(clusters=2).total_parts == 2
    ratios = [ir for _, ir in h.pareto()]
    assert all(b <= a for a, b in zip(ratios, ratios[1:]))


def test_insights(report):
    model = report.best_model
    freq = dg.frequency_matrix(model, "a", "x")
    assert sum(map(sum, freq.values)) == model.dataset.n_records
    cmi = dg.cmi_matrix(model, "a", "x")
    assert cmi.total_mi >= -1e-12
    assert cmi.total_mi == pytest.approx(sum(map(sum, cmi.values)))
    ranking = dg.typicality(model, "a", 0)
    assert len(ranking) == 3
    taus = [t for _, _, t in ranking]
    assert taus == sorted(taus, reverse=True)


def test_contrast_needs_three_variables(report):
    with pytest.raises(ValueError):
        dg.contrast_matrix(report.best_model, "a", 0, "a", "x")


def test_ari():
    assert dg.adjusted_rand_index([0, 0, 1, 1], [1, 1, 0, 0]) == pytest.approx(1.0)
    assert dg.adjusted_rand_index([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5)


def test_result_document(report):
    h = dg.build_hierarchy(report.best_model)
    doc = json.loads(dg.result_document_json(report.best_model, h))
    assert doc["format_version"] == 1
    assert doc["dataset"]["n_records"] == 2000
    assert len(doc["hierarchy"]["records"]) == len(h.records)
    assert doc["cost"]["total"] == pytest.approx(report.best_cost)
