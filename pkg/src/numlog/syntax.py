"""Parsing and rendering of the textual clause syntax.

Atoms look like ``pred(t1,...,tn)`` with decimal numerals, lowercase
symbolic constants, uppercase variables and ``[a,b,c]`` list sugar.
Clauses are ``head :- lit1,lit2.`` and ``%`` starts a line comment.
Decimals parse to exact rationals ("4.18" becomes 209/50).
"""

from __future__ import annotations

from fractions import Fraction

from .terms import NIL, Clause, Cons, Literal, Program


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} at line {line}, column {col}")
        self.message = message
        self.line = line
        self.col = col


class _Tokens:
    """Cursor over the token stream with source positions."""

    PUNCT = ("(", ")", "[", "]", ",", "|", ".", ":-")

    def __init__(self, text: str):
        self.tokens: list[tuple[str, str, int, int]] = []
        line, col = 1, 1
        i, n = 0, len(text)
        while i < n:
            ch = text[i]
            if ch == "\n":
                line += 1
                col = 1
                i += 1
                continue
            if ch in " \t\r":
                i += 1
                col += 1
                continue
            if ch == "%":
                while i < n and text[i] != "\n":
                    i += 1
                continue
            start_col = col
            if text.startswith(":-", i):
                self.tokens.append(("punct", ":-", line, start_col))
                i += 2
                col += 2
                continue
            if ch in "()[],|":
                self.tokens.append(("punct", ch, line, start_col))
                i += 1
                col += 1
                continue
            if ch.isdigit() or (
                ch == "-" and i + 1 < n and (text[i + 1].isdigit() or text[i + 1] == ".")
            ):
                j = i + 1
                seen_dot = False
                while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                    if text[j] == ".":
                        # a trailing '.' is the clause terminator, not a decimal point
                        if j + 1 >= n or not text[j + 1].isdigit():
                            break
                        seen_dot = True
                    j += 1
                self.tokens.append(("num", text[i:j], line, start_col))
                col += j - i
                i = j
                continue
            if ch == ".":
                self.tokens.append(("punct", ".", line, start_col))
                i += 1
                col += 1
                continue
            if ch.isalpha() or ch == "_":
                j = i + 1
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                word = text[i:j]
                kind = "var" if (ch.isupper() or ch == "_") else "name"
                self.tokens.append((kind, word, line, start_col))
                col += j - i
                i = j
                continue
            raise ParseError(f"unexpected character {ch!r}", line, start_col)
        self.pos = 0

    def peek(self):
        if self.pos < len(self.tokens):
            return self.tokens[self.pos]
        return ("eof", "", -1, -1)

    def next(self):
        tok = self.peek()
        if tok[0] != "eof":
            self.pos += 1
        return tok

    def expect(self, value: str):
        kind, val, line, col = self.next()
        if val != value:
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", line, col)

    def error(self, message: str):
        _, _, line, col = self.peek()
        raise ParseError(message, line, col)


class _VarTable:
    def __init__(self):
        self.ids: dict[str, int] = {}

    def get(self, name: str) -> int:
        if name == "_":
            vid = len(self.ids)
            self.ids[f"_G{vid}"] = vid
            return vid
        if name not in self.ids:
            self.ids[name] = len(self.ids)
        return self.ids[name]


def _parse_term(toks: _Tokens, vars: _VarTable):
    kind, val, line, col = toks.next()
    if kind == "num":
        return Fraction(val)
    if kind == "var":
        return vars.get(val)
    if kind == "name":
        return val
    if val == "[":
        if toks.peek()[1] == "]":
            toks.next()
            return NIL
        items = [_parse_term(toks, vars)]
        while toks.peek()[1] == ",":
            toks.next()
            items.append(_parse_term(toks, vars))
        tail = NIL
        if toks.peek()[1] == "|":
            toks.next()
            tail = _parse_term(toks, vars)
        toks.expect("]")
        out = tail
        for item in reversed(items):
            out = Cons(item, out)
        return out
    raise ParseError(f"expected a term, found {val!r}", line, col)


def _parse_literal(toks: _Tokens, vars: _VarTable) -> Literal:
    kind, val, line, col = toks.next()
    if kind != "name":
        raise ParseError(f"expected a predicate name, found {val!r}", line, col)
    args: list = []
    if toks.peek()[1] == "(":
        toks.next()
        args.append(_parse_term(toks, vars))
        while toks.peek()[1] == ",":
            toks.next()
            args.append(_parse_term(toks, vars))
        toks.expect(")")
    return Literal(val, tuple(args))


def parse_atom(text: str) -> Literal:
    toks = _Tokens(text)
    lit = _parse_literal(toks, _VarTable())
    if toks.peek()[1] == ".":
        toks.next()
    if toks.peek()[0] != "eof":
        toks.error("trailing input after atom")
    return lit


def parse_clause(text: str) -> Clause:
    toks = _Tokens(text)
    clause = _parse_clause_at(toks)
    if toks.peek()[0] != "eof":
        toks.error("trailing input after clause")
    return clause


def _parse_clause_at(toks: _Tokens) -> Clause:
    vars = _VarTable()
    head = _parse_literal(toks, vars)
    body: list[Literal] = []
    if toks.peek()[1] == ":-":
        toks.next()
        body.append(_parse_literal(toks, vars))
        while toks.peek()[1] == ",":
            toks.next()
            body.append(_parse_literal(toks, vars))
    toks.expect(".")
    return Clause(head, tuple(body))


def parse_program(text: str) -> Program:
    toks = _Tokens(text)
    clauses = []
    while toks.peek()[0] != "eof":
        clauses.append(_parse_clause_at(toks))
    return tuple(clauses)


def parse_facts(text: str) -> list[Literal]:
    """Ground atoms, one `pred(args).` per line (comments allowed)."""
    toks = _Tokens(text)
    facts = []
    while toks.peek()[0] != "eof":
        vars = _VarTable()
        lit = _parse_literal(toks, vars)
        if vars.ids:
            _, _, line, col = toks.peek()
            raise ParseError(f"fact {lit.pred}/{len(lit.args)} is not ground", line, col)
        toks.expect(".")
        facts.append(lit)
    return facts


def parse_examples(text: str) -> tuple[list[Literal], list[Literal]]:
    """`pos(atom).` / `neg(atom).` lines into (positives, negatives)."""
    toks = _Tokens(text)
    pos: list[Literal] = []
    neg: list[Literal] = []
    while toks.peek()[0] != "eof":
        kind, val, line, col = toks.next()
        if kind != "name" or val not in ("pos", "neg"):
            raise ParseError(f"expected pos(...) or neg(...), found {val!r}", line, col)
        toks.expect("(")
        atom = _parse_literal(toks, _VarTable())
        toks.expect(")")
        toks.expect(".")
        (pos if val == "pos" else neg).append(atom)
    return pos, neg


# ---------------------------------------------------------------------------
# rendering


def var_name(vid: int) -> str:
    letter = chr(ord("A") + vid % 26)
    suffix = vid // 26
    return letter if suffix == 0 else f"{letter}{suffix}"


def format_number(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    two = five = 0
    while den % 2 == 0:
        den //= 2
        two += 1
    while den % 5 == 0:
        den //= 5
        five += 1
    if den == 1:
        scale = max(two, five)
        scaled = value.numerator * 10**scale // value.denominator
        sign = "-" if scaled < 0 else ""
        digits = str(abs(scaled)).rjust(scale + 1, "0")
        return f"{sign}{digits[:-scale]}.{digits[-scale:]}"
    return f"{value.numerator}/{value.denominator}"


def format_term(term) -> str:
    t = type(term)
    if t is int:
        return var_name(term)
    if t is Fraction:
        return format_number(term)
    if t is str:
        return term
    if term is NIL:
        return "[]"
    parts = []
    while type(term) is Cons:
        parts.append(format_term(term.head))
        term = term.tail
    inner = ",".join(parts)
    if term is NIL:
        return f"[{inner}]"
    return f"[{inner}|{format_term(term)}]"


def format_literal(lit: Literal) -> str:
    if not lit.args:
        return lit.pred
    return f"{lit.pred}({','.join(format_term(a) for a in lit.args)})"


def format_clause(clause: Clause) -> str:
    head = format_literal(clause.head)
    if not clause.body:
        return f"{head}."
    return f"{head} :- {','.join(format_literal(l) for l in clause.body)}."


def format_program(prog: Program) -> str:
    return "\n".join(format_clause(c) for c in prog)
