import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from fptensor import Frame, load_bundled

settings.register_profile(
    "fptensor",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("fptensor")

FIXTURES = Path(__file__).resolve().parent / "fixtures"

E2, E3, E4 = "ap-exponential", "quartic-minkowski", "rotated-riemannian"
FRAMES_2D = ("identity", E2, E3, E4, "conformal-quartic")
FRAMES_3D = ("conformal-quartic-3d", "twisted-3d")
ALL_FRAMES = FRAMES_2D + FRAMES_3D

_cache: dict[str, Frame] = {}


def bundled(name: str) -> Frame:
    if name not in _cache:
        _cache[name] = Frame(load_bundled(name))
    return _cache[name]


def expected(name: str) -> dict:
    return json.loads((FIXTURES / f"{name}.expected.json").read_text(encoding="utf-8"))


@pytest.fixture(params=ALL_FRAMES)
def any_frame(request):
    return bundled(request.param)
