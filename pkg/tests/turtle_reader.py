"""A small Turtle reader for round-trip tests.

Supports @prefix, IRIs, prefixed names, ``a``, blank-node labels, string
literals with escapes, language tags, datatypes, and the ``;`` / ``,`` / ``.``
punctuation.  Returns a set of (s, p, o) tuples where IRIs are ``("iri", v)``,
blank nodes ``("bnode", id)`` and literals ``("lit", text, lang, datatype)``.
"""

import re

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<prefix>@prefix)
  | (?P<iri><[^>\s]*>)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<lang>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<dt>\^\^)
  | (?P<bnode>_:[A-Za-z0-9_\-]+)
  | (?P<pname>[A-Za-z][A-Za-z0-9_\-]*:[A-Za-z0-9_\-]*|:[A-Za-z0-9_\-]*)
  | (?P<a>a(?=[\s<"]))
  | (?P<punct>[;,.])
""",
    re.VERBOSE,
)

_ESC = {"t": "\t", "n": "\n", "r": "\r", '"': '"', "'": "'", "\\": "\\", "b": "\b", "f": "\f"}


def _unescape(body):
    out, i = [], 0
    while i < len(body):
        c = body[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        n = body[i + 1]
        if n in _ESC:
            out.append(_ESC[n])
            i += 2
        elif n == "u":
            out.append(chr(int(body[i + 2 : i + 6], 16)))
            i += 6
        elif n == "U":
            out.append(chr(int(body[i + 2 : i + 10], 16)))
            i += 10
        else:
            raise ValueError(f"bad escape \\{n}")
    return "".join(out)


def _tokens(text):
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"unexpected input at {pos}: {text[pos:pos + 20]!r}")
        pos = m.end()
        if m.lastgroup != "ws":
            yield m.lastgroup, m.group()


def parse_turtle(text):
    toks = list(_tokens(text))
    prefixes = {}
    triples = set()
    i = 0

    def resolve(kind, val):
        if kind == "iri":
            return ("iri", val[1:-1])
        if kind == "pname":
            p, _, local = val.partition(":")
            if p not in prefixes:
                raise ValueError(f"undeclared prefix {p!r}")
            return ("iri", prefixes[p] + local)
        if kind == "bnode":
            return ("bnode", val[2:])
        if kind == "a":
            return ("iri", RDF_TYPE)
        raise ValueError(f"unexpected {kind} {val!r}")

    def obj():
        nonlocal i
        kind, val = toks[i]
        i += 1
        if kind != "string":
            return resolve(kind, val)
        lex = _unescape(val[1:-1])
        lang = dt = None
        if i < len(toks) and toks[i][0] == "lang":
            lang = toks[i][1][1:]
            i += 1
        elif i < len(toks) and toks[i][0] == "dt":
            dt = resolve(*toks[i + 1])[1]
            i += 2
        return ("lit", lex, lang, dt)

    while i < len(toks):
        kind, val = toks[i]
        if kind == "prefix":
            pname, iri, dot = toks[i + 1], toks[i + 2], toks[i + 3]
            if pname[0] != "pname" or not pname[1].endswith(":") or iri[0] != "iri" or dot[1] != ".":
                raise ValueError("malformed @prefix")
            prefixes[pname[1][:-1]] = iri[1][1:-1]
            i += 4
            continue
        subj = resolve(kind, val)
        i += 1
        while True:
            pred = resolve(*toks[i])
            i += 1
            while True:
                triples.add((subj, pred, obj()))
                if toks[i][1] == ",":
                    i += 1
                    continue
                break
            sep = toks[i][1]
            i += 1
            if sep == ";":
                continue
            if sep == ".":
                break
            raise ValueError(f"expected ';' or '.', got {sep!r}")
    return triples
