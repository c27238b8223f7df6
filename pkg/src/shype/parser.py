"""Textual model DSL: tokenizer, recursive-descent parser, diagnostics.

A model file is a sequence of sections:

    params { r_in = 20  max_B = 200 }
    variables { B T }
    types { const = 1  linear(X) = X }
    iv { in -> B  t -> T }
    subcomponent Input = on_in:(in, r_in, const).Input + init:(in, 0, const).Input
    controller Con = on_in.Con' + full.Con'
    controller Con' = off_in.Con
    system = (Input <*> Output) <*> init.(Con || Con_f)
    ec {
      init = (true, B ~ b0 and T ~ 0)
      stoch on_in = (k_in_on, true)
      full = (B = max_B, true)
    }

Cooperation operators: `<a,b>` explicit synchronisation set, `||` empty set,
`<*>` all shared events (resolved once all definitions are known). `0` is the
nil controller. Stochastic events carry a `stoch` marker on their ec entry; a
stochastic activation containing random-variable terms is duration sugar.
Reset atoms are written `V ~ expr` or `V' = expr`; `true` is the empty reset.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

from . import expr as ex
from .model import (
    INIT_EVENT,
    Activity,
    Choice,
    Coop,
    EventCondition,
    Model,
    Name,
    Nil,
    Prefix,
    Subcomponent,
    Term,
)

STAR = frozenset({"<*>"})  # sync-set placeholder, resolved after assembly


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # error | warning
    span: SourceSpan
    message: str
    hint: Optional[str] = None

    def __str__(self):
        s = f"{self.span}: {self.severity}: {self.message}"
        if self.hint:
            s += f" ({self.hint})"
        return s


class _ParseError(Exception):
    def __init__(self, diag: ParseDiagnostic):
        super().__init__(str(diag))
        self.diag = diag


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<comment>\#[^\n]*)
    | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<op><\*>|->|<=|>=|\|\||[-+*/^(){},.<>=~:'])
    """,
    re.VERBOSE,
)

KEYWORDS = {
    "params", "variables", "types", "iv", "ec",
    "subcomponent", "controller", "system",
    "stoch", "and", "or", "not", "true", "false",
}


@dataclass(frozen=True)
class Token:
    kind: str  # number | ident | keyword | op | eof
    text: str
    span: SourceSpan


def tokenize(source: str, filename: str) -> List[Token]:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            span = SourceSpan(filename, line, pos - line_start + 1, 1)
            raise _ParseError(ParseDiagnostic(
                "error", span, f"unexpected character {source[pos]!r}"))
        text = m.group(0)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            span = SourceSpan(filename, line, pos - line_start + 1, len(text))
            if kind == "ident" and text in KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, text, span))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(filename, line, pos - line_start + 1, 1)))
    return tokens


# ---------------------------------------------------------------------------
# parser

class _Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def bump(self) -> Token:
        t = self.cur
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.cur.text == text and self.cur.kind in ("op", "keyword")

    def eat(self, text: str) -> bool:
        if self.at(text):
            self.bump()
            return True
        return False

    def expect(self, text: str, hint: Optional[str] = None) -> Token:
        if self.at(text):
            return self.bump()
        self.fail(f"expected {text!r}, found {self.cur.text!r}", hint)

    def expect_ident(self, what: str = "identifier") -> Token:
        if self.cur.kind == "ident":
            return self.bump()
        self.fail(f"expected {what}, found {self.cur.text!r}")

    def fail(self, message: str, hint: Optional[str] = None):
        raise _ParseError(ParseDiagnostic("error", self.cur.span, message, hint))

    # -- names with primes ------------------------------------------------

    def term_name(self) -> str:
        """Process name; trailing primes are part of the name (Con', C1'')."""
        name = self.expect_ident("process name").text
        while self.eat("'"):
            name += "'"
        return name

    # -- expressions ------------------------------------------------------

    def expression(self) -> ex.Expr:
        return self._additive()

    def _additive(self) -> ex.Expr:
        e = self._multiplicative()
        while self.cur.text in ("+", "-") and self.cur.kind == "op":
            op = self.bump().text
            e = ex.Bin(op, e, self._multiplicative())
        return e

    def _multiplicative(self) -> ex.Expr:
        e = self._unary()
        while self.cur.text in ("*", "/") and self.cur.kind == "op":
            op = self.bump().text
            e = ex.Bin(op, e, self._unary())
        return e

    def _unary(self) -> ex.Expr:
        if self.at("-"):
            self.bump()
            if self.cur.kind == "number":
                return ex.Num(-float(self.bump().text))
            return ex.Bin("-", ex.Num(0.0), self._unary())
        return self._power()

    def _power(self) -> ex.Expr:
        e = self._atom()
        if self.at("^"):
            self.bump()
            return ex.Bin("^", e, self._unary())  # right-associative
        return e

    def _atom(self) -> ex.Expr:
        t = self.cur
        if t.kind == "number":
            self.bump()
            return ex.Num(float(t.text))
        if t.kind == "ident":
            self.bump()
            if self.at("("):
                return self._call_or_rand(t)
            return ex.Var(t.text)
        if self.eat("("):
            e = self.expression()
            self.expect(")")
            return e
        self.fail(f"expected expression, found {t.text!r}")

    def _call_or_rand(self, name_tok: Token) -> ex.Expr:
        self.expect("(")
        args = [self.expression()]
        while self.eat(","):
            args.append(self.expression())
        self.expect(")")
        name = name_tok.text
        if name in ex.DISTRIBUTIONS:
            try:
                return ex.Rand(name, tuple(args))
            except Exception as exc:
                raise _ParseError(ParseDiagnostic(
                    "error", name_tok.span, str(exc))) from None
        if name in ("min", "max", "sqrt", "ln", "exp"):
            if name in ("sqrt", "ln", "exp") and len(args) != 1:
                raise _ParseError(ParseDiagnostic(
                    "error", name_tok.span, f"{name} takes one argument"))
            if name in ("min", "max") and len(args) < 2:
                raise _ParseError(ParseDiagnostic(
                    "error", name_tok.span, f"{name} takes at least two arguments"))
            return ex.Call(name, tuple(args))
        raise _ParseError(ParseDiagnostic(
            "error", name_tok.span, f"unknown function {name!r}",
            "known: min, max, sqrt, ln, exp and the distribution names"))

    # -- guards -----------------------------------------------------------

    def guard(self) -> ex.Guard:
        return self._or_guard()

    def _or_guard(self) -> ex.Guard:
        g = self._and_guard()
        while self.at("or"):
            self.bump()
            g = ex.Or(g, self._and_guard())
        return g

    def _and_guard(self) -> ex.Guard:
        g = self._not_guard()
        while self.at("and"):
            self.bump()
            g = ex.And(g, self._not_guard())
        return g

    def _not_guard(self) -> ex.Guard:
        if self.at("not"):
            self.bump()
            return ex.Not(self._not_guard())
        return self._guard_atom()

    def _guard_atom(self) -> ex.Guard:
        if self.at("true"):
            self.bump()
            return ex.TRUE
        if self.at("false"):
            self.bump()
            return ex.FALSE
        if self.at("("):
            # parenthesized guard or parenthesized expression starting a
            # comparison; try guard first, fall back on comparison
            mark = self.i
            self.bump()
            try:
                g = self.guard()
                self.expect(")")
                if self.cur.text in ("<=", ">=", "<", ">", "="):
                    raise _ParseError(ParseDiagnostic(
                        "error", self.cur.span, "backtrack"))
                return g
            except _ParseError:
                self.i = mark
        left = self.expression()
        t = self.cur
        if t.text in ("<=", ">=", "<", ">", "=") and t.kind == "op":
            self.bump()
            return ex.Cmp(t.text, left, self.expression())
        self.fail(f"expected comparison operator, found {t.text!r}")

    # -- resets -----------------------------------------------------------

    def reset(self) -> tuple:
        if self.at("true"):
            self.bump()
            return ()
        atoms = [self._reset_atom()]
        while self.at("and"):
            self.bump()
            atoms.append(self._reset_atom())
        return tuple(atoms)

    def _reset_atom(self) -> ex.ResetAtom:
        var = self.expect_ident("variable").text
        if self.eat("'"):
            self.expect("=", "reset atom is V ~ expr or V' = expr")
        else:
            self.expect("~", "reset atom is V ~ expr or V' = expr")
        return ex.ResetAtom(var, self.expression())

    # -- process terms ----------------------------------------------------

    def term(self) -> Term:
        return self._coop_term()

    def _coop_term(self) -> Term:
        t = self._choice_term()
        while True:
            if self.at("||"):
                self.bump()
                t = Coop(t, self._choice_term(), frozenset())
            elif self.at("<*>"):
                self.bump()
                t = Coop(t, self._choice_term(), STAR)
            elif self.at("<"):
                self.bump()
                events = [self.expect_ident("event name").text]
                while self.eat(","):
                    events.append(self.expect_ident("event name").text)
                self.expect(">")
                t = Coop(t, self._choice_term(), frozenset(events))
            else:
                return t

    def _choice_term(self) -> Term:
        t = self._prefix_term()
        while self.at("+"):
            self.bump()
            t = Choice(t, self._prefix_term())
        return t

    def _prefix_term(self) -> Term:
        if self.cur.kind == "number" and self.cur.text == "0":
            self.bump()
            return Nil()
        if self.eat("("):
            t = self.term()
            self.expect(")")
            return t
        if self.cur.kind == "ident" or self.at("init"):
            name_tok = self.bump()
            name = name_tok.text
            while self.eat("'"):
                name += "'"
            if self.at(":"):
                self.bump()
                act = self._activity()
                self.expect(".", "prefix continues with '.NAME'")
                return Prefix(name, act, self._prefix_term())
            if self.at("."):
                self.bump()
                return Prefix(name, None, self._prefix_term())
            return Name(name)
        self.fail(f"expected process term, found {self.cur.text!r}")

    def _activity(self) -> Activity:
        self.expect("(")
        influence = self.expect_ident("influence name").text
        self.expect(",")
        strength = self.expression()
        self.expect(",")
        itype = self.expect_ident("influence type").text
        args: Tuple = ()
        if self.eat("("):
            lst = [self.expression()]
            while self.eat(","):
                lst.append(self.expression())
            self.expect(")")
            args = tuple(lst)
        self.expect(")")
        return Activity(influence, strength, itype, args)


# ---------------------------------------------------------------------------
# section-level parsing and model assembly

class _ModelBuilder(_Parser):
    def __init__(self, tokens, filename):
        super().__init__(tokens)
        self.filename = filename
        self.params: dict = {}
        self.variables: list = []
        self.itypes: dict = {}
        self.iv: dict = {}
        self.subcomponents: dict = {}
        self.controllers: dict = {}
        self.system_term: Optional[Term] = None
        self.ecs: dict = {}
        self.stoch: set = set()
        self.order: list = []
        self.seen_sections: set = set()

    def parse(self) -> Model:
        if self.cur.kind == "eof":
            self.fail("expected at least one section")
        while self.cur.kind != "eof":
            self.section()
        if self.system_term is None:
            self.fail("missing `system` section")
        return self.assemble()

    def section(self):
        t = self.cur
        if t.kind != "keyword":
            self.fail(f"expected a section keyword, found {t.text!r}",
                      "sections: params, variables, types, iv, ec, "
                      "subcomponent, controller, system")
        kw = t.text
        if kw not in ("params", "variables", "types", "iv", "ec", "system",
                      "subcomponent", "controller"):
            self.fail(f"expected a section keyword, found {t.text!r}",
                      "sections: params, variables, types, iv, ec, "
                      "subcomponent, controller, system")
        if kw in ("params", "variables", "types", "iv", "ec", "system"):
            if kw in self.seen_sections:
                self.fail(f"duplicate section {kw!r}")
            self.seen_sections.add(kw)
        self.order.append(kw)
        self.bump()
        getattr(self, f"sec_{kw}")()

    def sec_params(self):
        self.expect("{")
        while not self.eat("}"):
            name = self.expect_ident("parameter name")
            self.expect("=")
            if name.text in self.params:
                raise _ParseError(ParseDiagnostic(
                    "error", name.span, f"duplicate parameter {name.text}"))
            self.params[name.text] = self.expression()

    def sec_variables(self):
        self.expect("{")
        while not self.eat("}"):
            v = self.expect_ident("variable name")
            if v.text in self.variables:
                raise _ParseError(ParseDiagnostic(
                    "error", v.span, f"duplicate variable {v.text}"))
            self.variables.append(v.text)
            self.eat(",")

    def sec_types(self):
        self.expect("{")
        while not self.eat("}"):
            name = self.expect_ident("influence type name")
            ps: list = []
            if self.eat("("):
                ps.append(self.expect_ident("type parameter").text)
                while self.eat(","):
                    ps.append(self.expect_ident("type parameter").text)
                self.expect(")")
            self.expect("=")
            if name.text in self.itypes:
                raise _ParseError(ParseDiagnostic(
                    "error", name.span, f"duplicate influence type {name.text}"))
            self.itypes[name.text] = (tuple(ps), self.expression())

    def sec_iv(self):
        self.expect("{")
        while not self.eat("}"):
            infl = self.expect_ident("influence name")
            self.expect("->")
            var = self.expect_ident("variable name").text
            if infl.text in self.iv:
                raise _ParseError(ParseDiagnostic(
                    "error", infl.span, f"duplicate iv entry {infl.text}"))
            self.iv[infl.text] = var
            self.eat(",")

    def sec_subcomponent(self):
        name = self.expect_ident("subcomponent name")
        self.expect("=")
        prefixes = [self._sub_prefix(name.text)]
        while self.eat("+"):
            prefixes.append(self._sub_prefix(name.text))
        if name.text in self.subcomponents:
            raise _ParseError(ParseDiagnostic(
                "error", name.span, f"duplicate subcomponent {name.text}"))
        self.subcomponents[name.text] = Subcomponent(name.text, tuple(prefixes))

    def _sub_prefix(self, subname: str):
        event_tok = self.cur
        if not (event_tok.kind == "ident" or self.at("init")):
            self.fail(f"expected event name, found {event_tok.text!r}")
        self.bump()
        self.expect(":", "subcomponent prefixes carry an activity")
        act = self._activity()
        self.expect(".")
        cont = self.expect_ident("subcomponent name")
        if cont.text != subname:
            raise _ParseError(ParseDiagnostic(
                "error", cont.span,
                f"subcomponent {subname} must recurse to itself, not {cont.text}"))
        return (event_tok.text, act)

    def sec_controller(self):
        name = self.term_name()
        self.expect("=")
        term = self.term()
        if name in self.controllers:
            self.fail(f"duplicate controller {name}")
        self.controllers[name] = term

    def sec_system(self):
        self.expect("=")
        self.system_term = self.term()

    def sec_ec(self):
        self.expect("{")
        while not self.eat("}"):
            is_stoch = self.eat("stoch")
            event_tok = self.cur
            if not (event_tok.kind == "ident" or self.at("init")):
                self.fail(f"expected event name, found {event_tok.text!r}")
            self.bump()
            event = event_tok.text
            if event in self.ecs:
                raise _ParseError(ParseDiagnostic(
                    "error", event_tok.span, f"duplicate ec entry for {event}"))
            self.expect("=")
            self.expect("(")
            if is_stoch:
                act = self.expression()
                kind = "duration" if ex.has_rand(act) else "rate"
                self.stoch.add(event)
            else:
                kind = "guard"
                act = self.guard()
            self.expect(",", f"expected ',' then reset in ec({event})")
            reset = self.reset()
            self.expect(")")
            self.ecs[event] = EventCondition(kind, act, reset)

    # -- assembly ---------------------------------------------------------

    def assemble(self) -> Model:
        sys = self.system_term
        # split the controlled system into uncontrolled part and controller
        if not (isinstance(sys, Coop) and isinstance(sys.right, Prefix)
                and sys.right.event == INIT_EVENT):
            self.fail("system must have the shape UNCTRL <*> init.CONTROLLER")
        uncontrolled = sys.left
        controller = sys.right.cont
        model = Model(
            variables=tuple(self.variables),
            params=dict(self.params),
            influence_types=dict(self.itypes),
            iv=dict(self.iv),
            subcomponents=dict(self.subcomponents),
            controllers=dict(self.controllers),
            uncontrolled=uncontrolled,
            controller=controller,
            event_conditions=dict(self.ecs),
            stochastic_events=frozenset(self.stoch),
            source_order=tuple(self.order),
        )
        return _resolve_star(model)


def _resolve_star(model: Model) -> Model:
    """Replace `<*>` placeholder sync sets with the actual shared events."""
    from dataclasses import replace

    def go(t: Term) -> Term:
        if isinstance(t, (Nil, Name)):
            return t
        if isinstance(t, Prefix):
            return Prefix(t.event, t.activity, go(t.cont))
        if isinstance(t, Choice):
            return Choice(go(t.left), go(t.right))
        if isinstance(t, Coop):
            left, right = go(t.left), go(t.right)
            sync = t.sync
            if sync == STAR:
                sync = frozenset(model.events_of(left) & model.events_of(right))
            return Coop(left, right, sync)
        raise TypeError(t)

    # events_of resolves names via the definition tables, which carry no
    # sync sets, so resolving against the pre-rewrite model is sound
    return replace(
        model,
        controllers={n: go(c) for n, c in model.controllers.items()},
        uncontrolled=go(model.uncontrolled),
        controller=go(model.controller),
    )


def parse_model(source: str, filename: str = "<input>"):
    """Parse DSL text. Returns (Model, []) or (None, diagnostics)."""
    try:
        tokens = tokenize(source, filename)
        return _ModelBuilder(tokens, filename).parse(), []
    except _ParseError as e:
        return None, [e.diag]
    except RecursionError:
        span = SourceSpan(filename, 1, 1, 1)
        return None, [ParseDiagnostic("error", span, "input nests too deeply")]


def parse_expr(text: str) -> ex.Expr:
    """Parse a standalone arithmetic expression, e.g. a sweep cost.
    Raises ShypeError on malformed input."""
    from .errors import ShypeError

    try:
        tokens = tokenize(text, "<expr>")
        p = _Parser(tokens)
        e = p.expression()
        if p.cur.kind != "eof":
            p.fail(f"trailing input after expression: {p.cur.text!r}")
    except _ParseError as err:
        raise ShypeError(f"bad expression {text!r}: {err.diag.message}")
    return e


def parse_term(text: str, model: Model) -> Term:
    """Parse a standalone process term, resolving `<*>` against the model's
    definitions. Raises ShypeError on malformed input."""
    from .errors import ShypeError

    try:
        tokens = tokenize(text, "<term>")
        p = _Parser(tokens)
        term = p.term()
        if p.cur.kind != "eof":
            p.fail(f"trailing input after term: {p.cur.text!r}")
    except _ParseError as e:
        raise ShypeError(f"bad process term {text!r}: {e.diag.message}")

    def go(t: Term) -> Term:
        if isinstance(t, (Nil, Name)):
            return t
        if isinstance(t, Prefix):
            return Prefix(t.event, t.activity, go(t.cont))
        if isinstance(t, Choice):
            return Choice(go(t.left), go(t.right))
        if isinstance(t, Coop):
            left, right = go(t.left), go(t.right)
            sync = t.sync
            if sync == STAR:
                sync = frozenset(model.events_of(left) & model.events_of(right))
            return Coop(left, right, sync)
        raise TypeError(t)

    return go(term)
