"""Versioned text format for :class:`~scmavlc.model.CodebookSet`.

The layout is a header of ``key value`` lines, the K x J factor graph, the
J x K channel gains, then the N x M constellation of each user in row-major
order::

    version 1
    K 4
    J 3
    M 4
    N 2
    sigma2 0.01
    varsigma2 5.0
    Pe 30.0
    labeling natural-binary
    graph
    0 1 1
    ...
    gains
    1.0 1.0 1.0 1.0
    ...
    user 1
    2.7712 0.01 0.01 2.6317
    4.4089 9.1626 1.4151 0.01
    ...

Floats are written with their shortest round-trip representation, so
``dumps(loads(text)) == text`` for any canonical file.
"""
import numpy as np

from .exceptions import DimensionError, DomainError, FormatError
from .model import LABELING, CodebookSet, FactorGraph, SystemParams

VERSION = 1

_INT_FIELDS = ("K", "J", "M", "N")
_FLOAT_FIELDS = ("sigma2", "varsigma2", "Pe")


def _fmt(value):
    return repr(float(value))


def dumps(codebook_set):
    """Serialize a codebook set to canonical text.

    :type codebook_set: :class:`~scmavlc.model.CodebookSet`
    :rtype: ``str``
    """
    params = codebook_set.params
    lines = ["version %d" % VERSION]
    lines += ["%s %d" % (name, getattr(params, name)) for name in _INT_FIELDS]
    lines += ["%s %s" % (name, _fmt(getattr(params, name))) for name in _FLOAT_FIELDS]
    lines.append("labeling %s" % LABELING)
    lines.append("graph")
    lines += [" ".join(str(int(v)) for v in row) for row in codebook_set.graph.F]
    lines.append("gains")
    lines += [" ".join(_fmt(v) for v in row) for row in codebook_set.gains]
    for j, book in enumerate(codebook_set.books):
        lines.append("user %d" % (j + 1))
        lines += [" ".join(_fmt(v) for v in row) for row in book.C]
    return "\n".join(lines) + "\n"


class _Lines:
    def __init__(self, text, source):
        self.source = source
        self._lines = [
            (no, line.split())
            for no, line in enumerate(text.splitlines(), start=1)
            if line.strip() and not line.lstrip().startswith("#")
        ]
        self._pos = 0

    def error(self, message, line_no=None):
        if line_no is None:
            line_no = self._lines[self._pos - 1][0] if self._pos else 0
        return FormatError(self.source, line_no, message)

    def next(self):
        if self._pos >= len(self._lines):
            last = self._lines[-1][0] if self._lines else 0
            raise FormatError(self.source, last, "unexpected end of file")
        line = self._lines[self._pos]
        self._pos += 1
        return line

    def field(self, key, convert):
        no, tokens = self.next()
        if len(tokens) != 2 or tokens[0] != key:
            raise self.error("expected '%s <value>'" % key, no)
        try:
            return convert(tokens[1])
        except ValueError:
            raise self.error("bad value for %s: %r" % (key, tokens[1]), no)

    def keyword(self, word):
        no, tokens = self.next()
        if tokens != [word]:
            raise self.error("expected '%s'" % word, no)

    def rows(self, count, width, convert):
        rows = []
        for _ in range(count):
            no, tokens = self.next()
            if len(tokens) != width:
                raise self.error(
                    "expected %d values, got %d" % (width, len(tokens)), no
                )
            try:
                rows.append([convert(token) for token in tokens])
            except ValueError:
                raise self.error("non-numeric value", no)
        return rows

    def done(self):
        if self._pos != len(self._lines):
            raise self.error("trailing content", self._lines[self._pos][0])


def loads(text, source="<string>"):
    """Parse codebook text.

    :raises FormatError: On any syntax, version or consistency problem.
    :rtype: :class:`~scmavlc.model.CodebookSet`
    """
    lines = _Lines(text, source)
    version = lines.field("version", int)
    if version != VERSION:
        raise lines.error("unsupported version %d" % version)
    header = {name: lines.field(name, int) for name in _INT_FIELDS}
    header.update({name: lines.field(name, float) for name in _FLOAT_FIELDS})
    labeling = lines.field("labeling", str)
    if labeling != LABELING:
        raise lines.error("unsupported labeling %r" % labeling)

    K, J, M, N = (header[name] for name in _INT_FIELDS)
    lines.keyword("graph")
    graph = lines.rows(K, J, int)
    lines.keyword("gains")
    gains = lines.rows(J, K, float)
    books = []
    for j in range(J):
        if lines.field("user", int) != j + 1:
            raise lines.error("expected 'user %d'" % (j + 1))
        books.append(lines.rows(N, M, float))
    lines.done()

    try:
        return CodebookSet(
            SystemParams(**header), FactorGraph(graph), books, np.array(gains)
        )
    except (DimensionError, DomainError, TypeError) as exc:
        raise FormatError(source, 0, "inconsistent codebook: %s" % exc.args[0])


def dump(codebook_set, path):
    with open(path, "w") as f:
        f.write(dumps(codebook_set))


def load(path):
    with open(path) as f:
        return loads(f.read(), source=str(path))
