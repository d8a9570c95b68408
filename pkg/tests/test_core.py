import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from percept_fusion.core import (
    THREADS_ENV,
    ConfigurationError,
    GaussianEstimate,
    InvalidParameterError,
    Modality,
    StimulusEvent,
    chunk_sizes,
    normal_pdf,
    parallel_map,
    substream,
    thread_count,
)


def test_normal_pdf_reference_values():
    assert normal_pdf(0.0, 0.0, 1.0) == pytest.approx(0.3989422804014327, abs=1e-15)
    assert normal_pdf(1.0, 0.0, 1.0) == pytest.approx(0.24197072451914337, abs=1e-15)
    assert normal_pdf(3.0, 1.0, 2.0) == pytest.approx(0.12098536225957168, abs=1e-15)


def test_normal_pdf_rejects_bad_sd():
    with pytest.raises(InvalidParameterError):
        normal_pdf(0.0, 0.0, 0.0)


@given(st.floats(-50, 50), st.floats(0.01, 30))
def test_normal_pdf_normalises_on_8_sigma_grid(mean, sd):
    x = np.linspace(mean - 8 * sd, mean + 8 * sd, 4001)
    y = normal_pdf(x, mean, sd)
    assert np.all(y >= 0)
    assert integrate.simpson(y, x=x) == pytest.approx(1.0, abs=1e-6)


def test_stimulus_event_validation():
    e = StimulusEvent("A", 10.0)
    assert e.modality is Modality.AUDITORY
    with pytest.raises(InvalidParameterError):
        StimulusEvent(Modality.VISUAL, math.nan)
    with pytest.raises(InvalidParameterError):
        StimulusEvent(Modality.VISUAL, 0.0, count=-1)
    with pytest.raises(InvalidParameterError):
        StimulusEvent(Modality.VISUAL, 0.0, duration_ms=-2.0)


def test_gaussian_estimate():
    assert GaussianEstimate(1.0, 3.0).variance == 9.0
    assert GaussianEstimate(0.0, math.inf).variance == math.inf
    with pytest.raises(InvalidParameterError):
        GaussianEstimate(0.0, 0.0)


def test_substream_is_keyed_by_seed_and_index():
    a = substream(5, 3).gen.random(8)
    b = substream(5, 3).gen.random(8)
    c = substream(5, 4).gen.random(8)
    d = substream(6, 3).gen.random(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
    assert substream(5, 3).seed == (5, 3)


def test_substream_independent_of_creation_order():
    late = [substream(1, i) for i in range(10)][7].gen.random(4)
    assert np.array_equal(late, substream(1, 7).gen.random(4))


def test_substream_rejects_negative_index():
    with pytest.raises(InvalidParameterError):
        substream(0, -1)


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert thread_count() == 3
    monkeypatch.setenv(THREADS_ENV, "0")
    assert thread_count() >= 1
    monkeypatch.setenv(THREADS_ENV, "x")
    with pytest.raises(ConfigurationError):
        thread_count()
    monkeypatch.setenv(THREADS_ENV, "-1")
    with pytest.raises(ConfigurationError):
        thread_count()


@pytest.mark.parametrize("threads", ["1", "4"])
def test_parallel_map_result_independent_of_threads(monkeypatch, threads):
    monkeypatch.setenv(THREADS_ENV, threads)
    out = parallel_map(lambda i: substream(9, i).gen.standard_normal(3).sum(), range(20))
    expected = [substream(9, i).gen.standard_normal(3).sum() for i in range(20)]
    assert out == expected


def test_chunk_sizes():
    assert chunk_sizes(10, 4) == [4, 4, 2]
    assert chunk_sizes(8, 4) == [4, 4]
    assert chunk_sizes(0, 4) == []
