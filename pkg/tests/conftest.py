import numpy as np
import pytest

from floorsurvey.geometry import Floorplan, Room


def box(x0, y0, x1, y1):
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)


@pytest.fixture
def square_plan():
    """One 10 x 10 room, walls on every side."""
    walls = [
        [0, 0, 10, 0],
        [10, 0, 10, 10],
        [10, 10, 0, 10],
        [0, 10, 0, 0],
    ]
    return Floorplan(np.array(walls, dtype=float), [Room(0, "sq", box(0, 0, 10, 10))])


@pytest.fixture
def two_room_plan():
    """Two 5 x 10 rooms split by a wall with a 2 m doorway at y in [4, 6]."""
    walls = [
        [0, 0, 10, 0],
        [10, 0, 10, 10],
        [10, 10, 0, 10],
        [0, 10, 0, 0],
        [5, 0, 5, 4],
        [5, 6, 5, 10],
    ]
    rooms = [Room(0, "west", box(0, 0, 5, 10)), Room(1, "east", box(5, 0, 10, 10))]
    return Floorplan(np.array(walls, dtype=float), rooms)
