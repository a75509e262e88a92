import numpy as np
import pytest

from sitesurvey.demo import (
    DEMO_GRAPHS,
    build_graph,
    demo_file,
    demo_graph,
    pilot_subset,
    synthetic_survey,
)
from sitesurvey.radio import SurveyDataset


@pytest.mark.parametrize("name", DEMO_GRAPHS)
def test_bundled_graph_matches_builder(name):
    assert demo_graph(name).to_json() == build_graph(name).to_json()


def test_scales():
    # the two measured areas had 27 and 61 vertices
    assert len(demo_graph("area_one")) == 27
    assert len(demo_graph("corridor")) == 61
    assert len(demo_graph("grid3")) == 9 and len(demo_graph("grid4")) == 16


@pytest.mark.parametrize("name", DEMO_GRAPHS)
def test_connected(name):
    g = demo_graph(name)
    assert len(g.distances_from(g.vertex_ids[0])) == len(g)


def test_pilot_is_subset_of_survey():
    survey = SurveyDataset.from_csv(demo_file("area_one_survey.csv"))
    pilot = SurveyDataset.from_csv(demo_file("area_one_pilot.csv"))
    assert len(pilot.locations()) == 20
    rows = set(zip(map(tuple, survey.xy.tolist()), survey.ap.tolist(), survey.rss.tolist()))
    assert all(r in rows for r in zip(map(tuple, pilot.xy.tolist()), pilot.ap.tolist(), pilot.rss.tolist()))


def test_synthetic_survey_deterministic():
    g = build_graph("grid3")
    a, b = synthetic_survey(g, seed=4), synthetic_survey(g, seed=4)
    assert np.array_equal(a.rss, b.rss) and a.aps == [f"ap{k}" for k in range(6)]
    assert len(pilot_subset(a, 3, seed=1).locations()) == 3
