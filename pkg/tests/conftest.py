"""Shared fixtures: the worked toy example and small synthetic problems."""

import pytest

from fgcluster.synth import SynthSpec, synth_instance, toy_instance


@pytest.fixture
def toy():
    return toy_instance()


@pytest.fixture
def small_instance():
    """Two frames, ten superpixels and two boxes each, video background."""
    return synth_instance(SynthSpec(separation=4.0), seed=7)


@pytest.fixture
def tiny_instance():
    """Small enough for the integer oracle."""
    return synth_instance(
        SynthSpec(n_frames=2, n_sp=6, m_box=2, separation=4.0), seed=3)
