"""Tests for the docstring field style used across the source tree."""

import ast
import re
from pathlib import Path

import pytest

SOURCE_ROOT = Path(__file__).resolve().parent.parent / "src"
GOOGLE_SECTION = re.compile(r"^\s*(Args|Returns|Raises|Yields):\s*$", re.MULTILINE)


def _docstrings(path):
    tree = ast.parse(path.read_text(encoding="utf-8"))
    nodes = [tree] + [
        node for node in ast.walk(tree)
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef))
    ]
    for node in nodes:
        doc = ast.get_docstring(node)
        if doc:
            yield getattr(node, "name", path.name), doc


@pytest.mark.parametrize(
    "path", sorted(SOURCE_ROOT.rglob("*.py")), ids=lambda p: str(p.relative_to(SOURCE_ROOT))
)
def test_docstrings_use_field_lists(path):
    """When a docstring documents parameters, it uses :param: fields, not Google sections."""
    offenders = [name for name, doc in _docstrings(path) if GOOGLE_SECTION.search(doc)]

    assert offenders == []
