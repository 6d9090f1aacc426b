import numpy as np
import pytest

from shear_beam_analyzer.models import (
    BeamElement,
    GeneralizedCoordinates,
    GeneralizedForces,
    SectionCompliances,
    SectionProperties,
)


@pytest.fixture
def section():
    """EI = 1, h/L = 1/4, Γ = 1/3."""
    return SectionProperties.from_ratio(1.0, 0.25)


@pytest.fixture
def compliances(section):
    return SectionCompliances.from_stiffness(section.ea, section.gas, section.ei)


@pytest.fixture
def beam(compliances):
    return BeamElement(length=1.0, segments=16, compliances=compliances)


@pytest.fixture
def offset_beam(compliances):
    return BeamElement(
        length=1.2,
        segments=12,
        compliances=compliances,
        rigid_offset_left=0.1,
        rigid_offset_right=0.15,
    )


@pytest.fixture
def origin():
    return GeneralizedCoordinates()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
