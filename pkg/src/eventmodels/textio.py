"""Small helpers shared by the line-oriented file formats."""

from .errors import InputError, ParseError

_RESERVED = set("{},=|;*#()/:") | {" ", "\t", "\n", "\r"}


def check_label(label, what="label"):
    if not isinstance(label, str) or not label:
        raise InputError(f"{what} must be a non-empty string, got {label!r}")
    bad = _RESERVED.intersection(label)
    if bad:
        raise InputError(f"{what} {label!r} contains reserved characters {sorted(bad)}")
    return label


def format_set(items):
    return "{" + ",".join(sorted(items)) + "}"


def parse_set(text, line=None):
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise ParseError(f"expected a {{...}} set, got {text!r}", line)
    inner = text[1:-1].strip()
    if not inner:
        return frozenset()
    return frozenset(part.strip() for part in inner.split(","))


def content_lines(text):
    """Yield ``(line_number, stripped_line)`` skipping blanks and ``#`` comments."""
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield number, line


def header_fields(text):
    """Parse ``key=value`` pairs from the leading ``#`` header line, if any."""
    first = text.split("\n", 1)[0]
    if not first.startswith("#"):
        return {}
    fields = {}
    for token in first[1:].split():
        if "=" in token:
            key, value = token.split("=", 1)
            fields[key] = value
    return fields


def parse_key_values(tokens, line=None):
    out = {}
    for token in tokens:
        if "=" not in token:
            raise ParseError(f"expected key=value, got {token!r}", line)
        key, value = token.split("=", 1)
        out[key] = value
    return out
