"""Test nestlab package initialization."""

import nestlab


def test_version():
    """Test that version is defined."""
    assert hasattr(nestlab, "__version__")
    assert nestlab.__version__ == "0.1.0"


def test_author():
    """Test that author is defined."""
    assert hasattr(nestlab, "__author__")
    assert nestlab.__author__ == "Eray Erdogan"


def test_public_api():
    """Test that every name in __all__ is importable from the package."""
    for name in nestlab.__all__:
        assert hasattr(nestlab, name), name
