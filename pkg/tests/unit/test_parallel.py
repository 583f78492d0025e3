"""
Tests for the index-ordered parallel map.
"""

import os
import random
import time

import pytest

from src.utils.parallel import ordered_map, resolve_threads


def test_resolve_threads():
    """Test worker count resolution."""
    assert resolve_threads(3) == 3
    assert resolve_threads(None) == (os.cpu_count() or 1)
    assert resolve_threads(0) == (os.cpu_count() or 1)


def test_ordered_map_keeps_input_order():
    """Test that results follow the input order, not completion order."""

    def slow_square(value):
        time.sleep(random.uniform(0.0, 0.005))
        return value * value

    items = list(range(40))
    assert ordered_map(slow_square, items, threads=8) == [i * i for i in items]


def test_ordered_map_single_thread():
    """Test the sequential path."""
    assert ordered_map(lambda x: x + 1, [1, 2, 3], threads=1) == [2, 3, 4]


def test_ordered_map_empty():
    """Test mapping over no items."""
    assert ordered_map(lambda x: x, [], threads=4) == []


def test_ordered_map_propagates_failure():
    """Test that a failure in a worker is re-raised."""

    def fail_on_three(value):
        if value == 3:
            raise ValueError("three")
        return value

    with pytest.raises(ValueError):
        ordered_map(fail_on_three, list(range(6)), threads=3)
