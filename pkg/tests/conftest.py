import pytest

from moralbench.corpus import make_pair
from moralbench.resources import load_resources


@pytest.fixture(scope="session")
def resources():
    return load_resources()


@pytest.fixture(scope="session")
def cows_pair():
    # The four-cows fable used as a running example.
    story = (
        "Four cows lived in a forest near a meadow. They were good friends "
        "and did everything together. They grazed together and stayed "
        "together, because of which no tigers or lions were able to kill "
        "them for food. But one day, the friends fought and each cow went "
        "to graze in a different direction. A tiger and a lion saw this and "
        "decided that it was the perfect opportunity to kill the cows. They "
        "hid in the bushes and surprised the cows and killed them all, one "
        "by one."
    )
    return make_pair(id="cows", story=story, moral="Unity is strength.")
