import numpy as np
import pytest

from pathfuse import (
    Frame,
    FusedPath,
    Layer,
    PathMLDocument,
    PathPoint,
    ProcessParameters,
    Track,
)


@pytest.fixture
def line_fused_s():
    """Straight-line path along x in the receiver frame, constant 100 mm/s."""
    n = 5
    pos = np.column_stack([np.linspace(0.0, 400.0, n), np.zeros(n), np.zeros(n)])
    ang = np.column_stack([np.zeros(n), np.zeros(n), np.linspace(0.0, np.pi / 2, n)])
    return FusedPath(pos, ang, np.full(n, 100.0), Frame.S)


def make_doc(
    xs=(0.0, 10.0, 20.0),
    process=None,
    project="part",
    tool_active=True,
    velocity=50.0,
):
    """Small valid single-layer document along the x axis."""
    if process is None:
        process = ProcessParameters("other", layer_height=2.0)
    points = tuple(PathPoint(x, 0.0, 0.0, 0.0, 0.0, 0.0, velocity) for x in xs)
    return PathMLDocument(
        project, process, (Layer("Layer_0", 0, (Track("Track_0", points, tool_active),)),)
    )
