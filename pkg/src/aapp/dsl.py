"""Parsing, validation, and serialization of aAPP scheduling-policy scripts.

An aAPP script is an ordered list of tagged policies.  Each policy holds one
or more blocks; a block names candidate workers (or ``*`` for all), a
selection strategy, invalidation rules, and affinity constraints.  The text
form is a YAML-flavoured surface syntax, parsed here with a small
indentation-based reader so that stylized forms (bare ``*``, ``!tag`` items,
``capacity_used 80%``) are accepted verbatim.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

# Strategy / followup keywords.
ANY = "any"
BEST_FIRST = "best_first"
DEFAULT = "default"
FAIL = "fail"

#: Name of the fallback policy applied when a tag's own blocks are exhausted.
DEFAULT_TAG = "default"

# ParseError categories.
SYNTAX = "syntax"
DUPLICATE_TAG = "duplicate-tag"
EMPTY_BLOCK_LIST = "empty-block-list"
BAD_THRESHOLD = "bad-threshold"
CONFLICTING_AFFINITY = "conflicting-affinity"
BAD_IDENTIFIER = "bad-identifier"

_IDENT_RE = re.compile(r"^[A-Za-z0-9_-]+$")
_CAPACITY_RE = re.compile(r"^capacity_used\s+(\d+)\s*%$")
_MAX_CONC_RE = re.compile(r"^max_concurrent_invocations\s+(\d+)$")


class ParseError(Exception):
    """A script rejected at parse time; never paired with a partial AST."""

    def __init__(self, category: str, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message} [{category}]")
        self.category = category
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Diagnostic:
    """Non-fatal finding from check_script."""

    level: str
    message: str
    line: int = 0
    col: int = 0

    def render(self, filename: str = "<script>") -> str:
        return f"{self.level.upper()} {filename}:{self.line}:{self.col} {self.message}"


@dataclass(frozen=True)
class AffinityConstraint:
    tag: str
    anti: bool = False

    def render(self) -> str:
        return f"!{self.tag}" if self.anti else self.tag


@dataclass(frozen=True)
class CapacityUsed:
    threshold: int  # percent of max memory, 0 < threshold <= 100


@dataclass(frozen=True)
class MaxConcurrentInvocations:
    limit: int  # >= 1


@dataclass(frozen=True)
class Block:
    #: None stands for the universal worker option ``*``.
    workers: tuple[str, ...] | None
    strategy: str = BEST_FIRST
    invalidate: tuple[CapacityUsed | MaxConcurrentInvocations, ...] = ()
    affinity: tuple[AffinityConstraint, ...] = ()
    line: int = field(default=0, compare=False)

    def affine_tags(self) -> frozenset[str]:
        return frozenset(c.tag for c in self.affinity if not c.anti)

    def anti_affine_tags(self) -> frozenset[str]:
        return frozenset(c.tag for c in self.affinity if c.anti)

    def capacity_threshold(self) -> int | None:
        for rule in self.invalidate:
            if isinstance(rule, CapacityUsed):
                return rule.threshold
        return None

    def concurrency_limit(self) -> int | None:
        for rule in self.invalidate:
            if isinstance(rule, MaxConcurrentInvocations):
                return rule.limit
        return None


@dataclass(frozen=True)
class TagPolicy:
    tag: str
    blocks: tuple[Block, ...]
    followup: str = DEFAULT
    #: Whether followup was written in the source (vs applied as a default).
    followup_explicit: bool = field(default=False, compare=False)
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class AappScript:
    policies: tuple[TagPolicy, ...]

    def policy(self, tag: str) -> TagPolicy | None:
        for pol in self.policies:
            if pol.tag == tag:
                return pol
        return None

    def tags(self) -> tuple[str, ...]:
        return tuple(pol.tag for pol in self.policies)

    def __contains__(self, tag: str) -> bool:
        return self.policy(tag) is not None


# ---------------------------------------------------------------------------
# Parsing


def _strip_comment(raw: str) -> str:
    quote = None
    for i, ch in enumerate(raw):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return raw[:i]
    return raw


def _unquote(s: str) -> str:
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "\"'":
        return s[1:-1]
    return s


def _logical_lines(text: str) -> list[tuple[int, int, str]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped_lead = raw[: len(raw) - len(raw.lstrip())]
        if "\t" in stripped_lead:
            raise ParseError(SYNTAX, "tabs are not allowed in indentation", lineno, 1)
        line = _strip_comment(raw)
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip(" "))
        out.append((lineno, indent, line.strip()))
    return out


def _check_ident(name: str, what: str, line: int, col: int) -> str:
    if not _IDENT_RE.match(name):
        raise ParseError(
            BAD_IDENTIFIER, f"invalid {what} identifier: {name!r}", line, col
        )
    return name


def _split_key(txt: str, line: int, col: int) -> tuple[str, str]:
    if ":" not in txt:
        raise ParseError(SYNTAX, f"expected 'key: value', got {txt!r}", line, col)
    key, _, value = txt.partition(":")
    return key.strip(), value.strip()


_FOLLOWUP_RE = re.compile(r"^(['\"]?)followup\1\s*:")


def _is_followup_line(txt: str) -> bool:
    return not txt.startswith("- ") and bool(_FOLLOWUP_RE.match(txt))


class _Parser:
    def __init__(self, text: str):
        self.items = _logical_lines(text)

    def parse(self) -> AappScript:
        items = self.items
        if not items:
            raise ParseError(SYNTAX, "empty script", 1, 1)
        base = items[0][1]
        policies: list[TagPolicy] = []
        seen: set[str] = set()
        pos = 0
        while pos < len(items):
            lineno, indent, txt = items[pos]
            if indent != base or not txt.startswith("- "):
                raise ParseError(
                    SYNTAX, f"expected a top-level '- tag:' entry, got {txt!r}",
                    lineno, indent + 1,
                )
            tag_txt = txt[2:].strip()
            key, value = _split_key(tag_txt, lineno, indent + 3)
            if value:
                raise ParseError(
                    SYNTAX, f"unexpected value after tag {key!r}", lineno, indent + 3
                )
            tag = _check_ident(_unquote(key), "tag", lineno, indent + 3)
            if tag in seen:
                raise ParseError(
                    DUPLICATE_TAG, f"tag {tag!r} defined twice", lineno, indent + 3
                )
            seen.add(tag)
            body: list[tuple[int, int, str]] = []
            pos += 1
            while pos < len(items) and items[pos][1] > base:
                body.append(items[pos])
                pos += 1
            policies.append(self._parse_tag(tag, lineno, body))
        return AappScript(tuple(policies))

    def _parse_tag(
        self, tag: str, tagline: int, body: list[tuple[int, int, str]]
    ) -> TagPolicy:
        blocks: list[Block] = []
        followup: str | None = None
        block_indent: int | None = None
        i = 0
        while i < len(body):
            lineno, indent, txt = body[i]
            if _is_followup_line(txt):
                if followup is not None:
                    raise ParseError(
                        SYNTAX, "duplicate followup clause", lineno, indent + 1
                    )
                _, value = _split_key(txt, lineno, indent + 1)
                value = _unquote(value)
                if value not in (DEFAULT, FAIL):
                    raise ParseError(
                        SYNTAX,
                        f"followup must be 'default' or 'fail', got {value!r}",
                        lineno, indent + 1,
                    )
                followup = value
                i += 1
                continue
            if not txt.startswith("- "):
                raise ParseError(
                    SYNTAX, f"expected a block entry under tag {tag!r}", lineno,
                    indent + 1,
                )
            if block_indent is None:
                block_indent = indent
            if indent != block_indent:
                raise ParseError(
                    SYNTAX, "misaligned block entry", lineno, indent + 1
                )
            block_lines = [(lineno, block_indent + 2, txt[2:].strip())]
            i += 1
            while (
                i < len(body)
                and body[i][1] > block_indent
                and not _is_followup_line(body[i][2])
            ):
                block_lines.append(body[i])
                i += 1
            blocks.append(self._parse_block(block_lines))
        if not blocks:
            raise ParseError(
                EMPTY_BLOCK_LIST, f"tag {tag!r} declares no blocks", tagline, 1
            )
        return TagPolicy(
            tag=tag,
            blocks=tuple(blocks),
            followup=followup if followup is not None else DEFAULT,
            followup_explicit=followup is not None,
            line=tagline,
        )

    def _parse_block(self, lines: list[tuple[int, int, str]]) -> Block:
        first_line = lines[0][0]
        # key -> (inline value or None, list items, line)
        fields: dict[str, tuple[str | None, list[tuple[int, int, str]], int]] = {}
        open_key: str | None = None
        for lineno, indent, txt in lines:
            if txt == "-" or txt.startswith("- "):
                if open_key is None or fields[open_key][0] is not None:
                    raise ParseError(
                        SYNTAX, "list item without an enclosing field", lineno,
                        indent + 1,
                    )
                item = txt[1:].strip()
                if not item:
                    raise ParseError(SYNTAX, "empty list item", lineno, indent + 1)
                fields[open_key][1].append((lineno, indent, item))
                continue
            key, value = _split_key(txt, lineno, indent + 1)
            key = _unquote(key)
            if key not in ("workers", "strategy", "invalidate", "affinity"):
                raise ParseError(
                    SYNTAX, f"unknown block field {key!r}", lineno, indent + 1
                )
            if key in fields:
                raise ParseError(
                    SYNTAX, f"duplicate block field {key!r}", lineno, indent + 1
                )
            fields[key] = (value if value else None, [], lineno)
            open_key = key

        if "workers" not in fields:
            raise ParseError(SYNTAX, "block is missing 'workers'", first_line, 1)

        workers = self._parse_workers(*fields["workers"])
        strategy = BEST_FIRST
        if "strategy" in fields:
            value, items, lineno = fields["strategy"]
            if items or value is None:
                raise ParseError(
                    SYNTAX, "strategy takes a single value", lineno, 1
                )
            strategy = _unquote(value)
            if strategy not in (ANY, BEST_FIRST):
                raise ParseError(
                    SYNTAX,
                    f"strategy must be 'any' or 'best_first', got {strategy!r}",
                    lineno, 1,
                )
        invalidate: tuple = ()
        if "invalidate" in fields:
            invalidate = self._parse_invalidate(*fields["invalidate"])
        affinity: tuple = ()
        if "affinity" in fields:
            affinity = self._parse_affinity(*fields["affinity"])
        return Block(
            workers=workers,
            strategy=strategy,
            invalidate=invalidate,
            affinity=affinity,
            line=first_line,
        )

    def _parse_workers(
        self, value: str | None, items: list[tuple[int, int, str]], lineno: int
    ) -> tuple[str, ...] | None:
        if value is not None:
            value = _unquote(value)
            if value == "*":
                return None
            raw = [(lineno, 1, part.strip()) for part in value.split(",")]
        elif items:
            raw = items
        else:
            raise ParseError(EMPTY_BLOCK_LIST, "workers list is empty", lineno, 1)
        ids: list[str] = []
        for ln, col, token in raw:
            wid = _check_ident(_unquote(token), "worker", ln, col + 1)
            if wid in ids:
                raise ParseError(
                    BAD_IDENTIFIER, f"worker {wid!r} listed twice in one block",
                    ln, col + 1,
                )
            ids.append(wid)
        return tuple(ids)

    def _parse_invalidate(
        self, value: str | None, items: list[tuple[int, int, str]], lineno: int
    ) -> tuple[CapacityUsed | MaxConcurrentInvocations, ...]:
        raw = items if value is None else [(lineno, 1, value)]
        if not raw:
            raise ParseError(SYNTAX, "invalidate list is empty", lineno, 1)
        rules: list[CapacityUsed | MaxConcurrentInvocations] = []
        for ln, col, token in raw:
            token = _unquote(token)
            m = _CAPACITY_RE.match(token)
            if m:
                threshold = int(m.group(1))
                if not 0 < threshold <= 100:
                    raise ParseError(
                        BAD_THRESHOLD,
                        f"capacity_used threshold must be in (0, 100], got {threshold}",
                        ln, col + 1,
                    )
                if any(isinstance(r, CapacityUsed) for r in rules):
                    raise ParseError(
                        SYNTAX, "duplicate capacity_used rule", ln, col + 1
                    )
                rules.append(CapacityUsed(threshold))
                continue
            m = _MAX_CONC_RE.match(token)
            if m:
                limit = int(m.group(1))
                if limit < 1:
                    raise ParseError(
                        BAD_THRESHOLD,
                        f"max_concurrent_invocations must be >= 1, got {limit}",
                        ln, col + 1,
                    )
                if any(isinstance(r, MaxConcurrentInvocations) for r in rules):
                    raise ParseError(
                        SYNTAX, "duplicate max_concurrent_invocations rule",
                        ln, col + 1,
                    )
                rules.append(MaxConcurrentInvocations(limit))
                continue
            # A recognized rule keyword with a malformed bound is a value
            # error, not a structural one.
            keyword = token.split()[0] if token.split() else ""
            category = (
                BAD_THRESHOLD
                if keyword in ("capacity_used", "max_concurrent_invocations")
                else SYNTAX
            )
            raise ParseError(
                category, f"unknown invalidate rule: {token!r}", ln, col + 1
            )
        return tuple(rules)

    def _parse_affinity(
        self, value: str | None, items: list[tuple[int, int, str]], lineno: int
    ) -> tuple[AffinityConstraint, ...]:
        if value is not None:
            raw = [(lineno, 1, part.strip()) for part in value.split(",")]
        else:
            raw = items
        if not raw:
            raise ParseError(SYNTAX, "affinity list is empty", lineno, 1)
        constraints: list[AffinityConstraint] = []
        seen: dict[str, bool] = {}
        for ln, col, token in raw:
            token = _unquote(token)
            anti = token.startswith("!")
            name = token[1:] if anti else token
            tag = _check_ident(name, "tag", ln, col + 1)
            if tag in seen:
                raise ParseError(
                    CONFLICTING_AFFINITY,
                    f"tag {tag!r} appears more than once in one affinity list",
                    ln, col + 1,
                )
            seen[tag] = anti
            constraints.append(AffinityConstraint(tag=tag, anti=anti))
        return tuple(constraints)


def parse_script(text: str) -> AappScript:
    """Parse an aAPP document, preserving tag, block, worker, and affinity order.

    Raises ParseError (with line/column and a category) on any invariant
    violation; a partial AST is never returned.
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Serialization


def serialize_script(script: AappScript) -> str:
    """Emit canonical text such that parse(serialize(s)) == s structurally."""
    out: list[str] = []
    for pol in script.policies:
        out.append(f"- {pol.tag}:")
        for block in pol.blocks:
            if block.workers is None:
                out.append("  - workers: *")
            else:
                out.append("  - workers:")
                out.extend(f"      - {w}" for w in block.workers)
            out.append(f"    strategy: {block.strategy}")
            if block.invalidate:
                out.append("    invalidate:")
                for rule in block.invalidate:
                    if isinstance(rule, CapacityUsed):
                        out.append(f"      - capacity_used {rule.threshold}%")
                    else:
                        out.append(
                            f"      - max_concurrent_invocations {rule.limit}"
                        )
            if block.affinity:
                out.append("    affinity:")
                out.extend(f"      - {c.render()}" for c in block.affinity)
        out.append(f"  followup: {pol.followup}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Checking


def check_script(script: AappScript, config=None) -> list[Diagnostic]:
    """Cross-reference a script against a cluster config; returns warnings only.

    ``config`` is a cluster.ClusterConfig (or None to skip worker checks).
    """
    diags: list[Diagnostic] = []
    defined = set(script.tags())

    unknown_workers: list[tuple[str, int]] = []
    unknown_tags: list[tuple[str, int]] = []
    seen_workers: set[str] = set()
    seen_tags: set[str] = set()
    for pol in script.policies:
        for block in pol.blocks:
            if config is not None and block.workers is not None:
                for wid in block.workers:
                    if wid not in config and wid not in seen_workers:
                        seen_workers.add(wid)
                        unknown_workers.append((wid, block.line))
            for c in block.affinity:
                if c.tag not in defined and c.tag not in seen_tags:
                    seen_tags.add(c.tag)
                    unknown_tags.append((c.tag, block.line))

    for wid, line in unknown_workers:
        diags.append(
            Diagnostic("warning", f"worker {wid!r} is not in the cluster config", line)
        )
    for tag, line in unknown_tags:
        # Legal: tags label functions, not only policies.  Still worth surfacing.
        diags.append(
            Diagnostic(
                "warning",
                f"affinity tag {tag!r} has no policy of its own", line,
            )
        )

    default_pol = script.policy(DEFAULT_TAG)
    if default_pol is None:
        # Only an explicitly written `followup: default` earns a warning; the
        # implicit default-followup of a tag that never mentions followup is
        # ordinary usage.
        for pol in script.policies:
            if pol.followup == DEFAULT and pol.followup_explicit:
                diags.append(
                    Diagnostic(
                        "warning",
                        "a policy falls back to 'default' but no default policy "
                        "exists",
                        pol.line,
                    )
                )
                break
    elif default_pol.followup_explicit:
        diags.append(
            Diagnostic(
                "warning",
                "followup on the default policy is ignored (it is applied once, "
                "never recursively)",
                default_pol.line,
            )
        )
    return diags
