import pytest
from hypothesis import given, strategies as st

from iterlab.errors import DomainError
from iterlab.models import (Cauchy, IteratedFBm, IteratedFBmChain, ProcessModel, ScaledIterated,
                            WeightedJ, check_hurst, parse_model)


def test_hurst_range():
    assert check_hurst(1.0) == 1.0
    for bad in (0.0, -0.1, 1.01, float("nan")):
        with pytest.raises(DomainError):
            check_hurst(bad)


def test_parse_model_forms():
    assert parse_model("fbm:H=0.3") == ProcessModel("FBm", (0.3,))
    assert parse_model("itfbm:H1=0.6,H2=0.4") == IteratedFBm(0.6, 0.4)
    assert parse_model("chain:H=0.5/0.5/0.9") == IteratedFBmChain(0.5, 0.5, 0.9)
    assert parse_model("j1:H=0.25") == WeightedJ(1, 0.25)
    assert parse_model("j:n=3,H=0.4") == WeightedJ(3, 0.4)
    assert parse_model("prodfbm:n=2,H=0.8").n == 2
    assert parse_model("scaled:K=0.3,H=0.6") == ScaledIterated(0.3, 0.6)
    assert parse_model("cc").tag == "CauchyOfCauchy"


@pytest.mark.parametrize("text", ["nope", "fbm:H", "fbm:H=2", "fbm:Q=1", "j1:n=2,H=0.5",
                                  "scaled:K=-1,H=0.5", "cauchy:H=0.5"])
def test_parse_model_rejects(text):
    with pytest.raises(DomainError):
        parse_model(text)


def test_weighted_outer_length_checked():
    with pytest.raises(DomainError):
        WeightedJ(2, 0.5, (0.5,))


@given(st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_self_similarity_exponents(h1, h2):
    assert IteratedFBm(h1, h2).self_similarity() == pytest.approx(h1 * h2)
    assert WeightedJ(2, h2).self_similarity() == h2
    assert ScaledIterated(0.7, h2).self_similarity() == pytest.approx(0.7 + h2 / 2)
    assert Cauchy().self_similarity() == 1.0
