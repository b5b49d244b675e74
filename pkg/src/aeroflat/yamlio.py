"""YAML reading that keeps line/column positions for error messages."""
import yaml

from .errors import ConfigError


class MarkedDict(dict):
    """dict remembering where each key's value starts in the source."""

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.marks = {}
        self.start = None


class MarkedList(list):
    def __init__(self, *a):
        super().__init__(*a)
        self.marks = []
        self.start = None


def _fmt(mark, source):
    if mark is None:
        return source or "<input>"
    return f"{source or '<input>'}:{mark.line + 1}:{mark.column + 1}"


class _Loader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    out = MarkedDict()
    out.start = node.start_mark
    for knode, vnode in node.value:
        key = loader.construct_object(knode, deep=True)
        if key in out:
            raise ConfigError(f"{_fmt(knode.start_mark, loader.source)}: duplicate key {key!r}")
        out[key] = loader.construct_object(vnode, deep=True)
        out.marks[key] = vnode.start_mark
    return out


def _construct_seq(loader, node):
    out = MarkedList()
    out.start = node.start_mark
    for v in node.value:
        out.append(loader.construct_object(v, deep=True))
        out.marks.append(v.start_mark)
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_seq)


def load(text, source=None):
    loader = _Loader(text)
    loader.source = source
    try:
        return loader.get_single_data()
    except yaml.MarkedYAMLError as e:
        raise ConfigError(f"{_fmt(e.problem_mark, source)}: {e.problem}") from None
    finally:
        loader.dispose()


def load_file(path):
    with open(path, encoding="utf-8") as fh:
        return load(fh.read(), source=str(path))


def where(container, key=None, source=None):
    """Position string for ``container[key]`` (or the container itself)."""
    mark = None
    if key is not None and isinstance(container, (MarkedDict, MarkedList)):
        try:
            mark = container.marks[key]
        except (KeyError, IndexError, TypeError):
            mark = container.start
    elif isinstance(container, (MarkedDict, MarkedList)):
        mark = container.start
    return _fmt(mark, source)


def check_keys(d, allowed, required=(), source=None, what="section"):
    if not isinstance(d, dict):
        raise ConfigError(f"{where(d, source=source)}: {what} must be a mapping")
    for k in d:
        if k not in allowed:
            raise ConfigError(f"{where(d, k, source)}: unknown key {k!r} in {what}")
    for k in required:
        if k not in d:
            raise ConfigError(f"{where(d, source=source)}: missing key {k!r} in {what}")


def number(d, key, source=None, positive=False, default=None):
    if key not in d:
        if default is not None:
            return default
        raise ConfigError(f"{where(d, source=source)}: missing key {key!r}")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where(d, key, source)}: {key!r} must be a number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{where(d, key, source)}: {key!r} must be positive")
    return float(v)
