"""
Parser for the W surface syntax.

Turns .w source text into core-model values. Syntax errors come from lark;
unknown symbols, arity and sort mismatches are collected per statement so a
single run reports all of them.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from lark import Lark, Token, Tree
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken

from .errors import ParseFailed
from .model import (
    AB,
    FALSE,
    OCCURS,
    TRUE,
    Abstract,
    ArithmeticAtom,
    Atom,
    BinOp,
    CausalMechanism,
    CausalTheory,
    Const,
    Do,
    FunctionSymbol,
    Init,
    Literal,
    Num,
    Obs,
    Scenario,
    Signature,
    Sort,
    SourceSpan,
    StaticTerm,
    SymbolKind,
    Term,
    Var,
    expand_shorthands,
)

logger = logging.getLogger(__name__)

GRAMMAR_FILE = "w.lark"
_ARITHMETIC = ("add", "sub", "mul")
_OPERATORS = {"add": "+", "sub": "-", "mul": "*"}


@dataclass(frozen=True)
class ParseError:
    """A located parse problem."""

    span: SourceSpan
    message: str
    expected: Tuple[str, ...] = ()

    def __str__(self) -> str:
        text = f"{self.span}: {self.message}"
        if self.expected:
            text += f" (expected one of: {', '.join(self.expected)})"
        return text


class _StatementError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(message)
        self.message = message
        self.span = span


@lru_cache(maxsize=1)
def _lark() -> Lark:
    return Lark.open(GRAMMAR_FILE, rel_to=__file__, parser="earley", propagate_positions=True)


def _syntax_error(exc: UnexpectedInput, text: str, file: str) -> ParseError:
    lines = text.split("\n")
    line = exc.line if isinstance(exc.line, int) and exc.line > 0 else len(lines)
    column = exc.column if isinstance(exc.column, int) and exc.column > 0 else len(lines[line - 1]) + 1
    span = SourceSpan(file, line, column, line, column + 1)
    if isinstance(exc, UnexpectedCharacters):
        message = f"unexpected character {exc.char!r}"
        expected = exc.allowed or set()
    elif isinstance(exc, UnexpectedEOF):
        message = "unexpected end of input"
        expected = set(exc.expected or ())
    elif isinstance(exc, UnexpectedToken):
        message = f"unexpected {exc.token!r}"
        expected = exc.expected or set()
    else:
        message = "syntax error"
        expected = set()
    return ParseError(span, message, tuple(sorted({_describe_terminal(t) for t in expected})))


def _describe_terminal(name: str) -> str:
    try:
        terminal = _lark().get_terminal(name)
    except KeyError:
        return name
    if terminal.pattern.type == "str":
        return repr(terminal.pattern.value)
    return name


def _parse_tree(text: str, file: str) -> Tree:
    try:
        return _lark().parse(text)
    except UnexpectedInput as exc:
        error = _syntax_error(exc, text, file)
        logger.debug(f"syntax error: {error}")
        raise ParseFailed([error]) from exc


class _TheoryBuilder:
    """Walks a parse tree and builds the signature, mechanisms and scenario."""

    def __init__(self, file: str, signature: Optional[Signature] = None):
        self.file = file
        self.scenario_only = signature is not None
        self.sorts: List[Sort] = list(signature.sorts) if signature else []
        self.symbols: List[FunctionSymbol] = list(signature.symbols) if signature else []
        self.signature = signature or Signature()
        self.mechanisms: List[CausalMechanism] = []
        self.statics: List[Atom] = []
        self.constraints: List[ArithmeticAtom] = []
        self.inits: List[Init] = []
        self.dos: List[Do] = []
        self.observations: List[Obs] = []
        self.errors: List[ParseError] = []

    # -- spans and errors ------------------------------------------------

    def span(self, node: Union[Tree, Token]) -> SourceSpan:
        if isinstance(node, Token):
            return SourceSpan(self.file, node.line, node.column, node.end_line, node.end_column)
        meta = node.meta
        if getattr(meta, "empty", True):
            return SourceSpan(self.file, 1, 1, 1, 1)
        return SourceSpan(self.file, meta.line, meta.column, meta.end_line, meta.end_column)

    def fail(self, message: str, node: Union[Tree, Token]) -> "_StatementError":
        return _StatementError(message, self.span(node))

    # -- driver ------------------------------------------------------------

    def build(self, tree: Tree) -> None:
        statements = list(tree.children)
        declarations = ("sorts_decl", "statics_decl", "fluents_decl", "actions_decl")
        for statement in statements:
            if statement.data in declarations:
                self._guard(self._declaration, statement)
        self.signature = Signature(tuple(self.sorts), tuple(self.symbols))

        in_scenario = self.scenario_only
        for statement in statements:
            kind = statement.data
            if kind in declarations:
                if in_scenario:
                    self.errors.append(ParseError(self.span(statement), "declarations must precede 'scenario.'"))
                continue
            if kind == "scenario_mark":
                if in_scenario:
                    self.errors.append(ParseError(self.span(statement), "duplicate 'scenario.' marker"))
                in_scenario = True
            elif kind == "mechanism":
                if in_scenario:
                    self.errors.append(ParseError(self.span(statement), "mechanisms must precede 'scenario.'"))
                else:
                    self._guard(self._mechanism, statement)
            elif not in_scenario:
                self.errors.append(ParseError(self.span(statement), "facts may only appear after 'scenario.'"))
            else:
                self._guard(getattr(self, f"_{kind}"), statement)

    def _guard(self, handler, statement: Tree) -> None:
        try:
            handler(statement)
        except _StatementError as err:
            self.errors.append(ParseError(err.span, err.message))

    def scenario(self) -> Scenario:
        return expand_shorthands(
            Scenario(
                statics=tuple(self.statics),
                constraints=tuple(self.constraints),
                inits=tuple(self.inits),
                dos=tuple(self.dos),
                observations=tuple(self.observations),
            )
        )

    # -- declarations ----------------------------------------------------

    def _declaration(self, tree: Tree) -> None:
        if tree.data == "sorts_decl":
            for sort_def in tree.children:
                name, *rest = sort_def.children
                values = tuple(str(t) for t in rest[0].children) if rest else ()
                self.sorts.append(Sort(str(name), values, span=self.span(sort_def)))
            return
        children = list(tree.children)
        if tree.data == "statics_decl":
            kind = SymbolKind.STATIC
        elif tree.data == "actions_decl":
            kind = SymbolKind.ACTION
        else:
            kind = SymbolKind(str(children.pop(0)))
        for decl in children:
            name = str(decl.children[0])
            params: Tuple[str, ...] = ()
            value_sort = "boolean"
            for part in decl.children[1:]:
                if part.data == "param_sorts":
                    params = tuple(str(t) for t in part.children)
                else:
                    value_sort = str(part.children[0])
            for sort_name in params + (value_sort,):
                if not self._sort_known(sort_name):
                    raise self.fail(f"unknown sort {sort_name}", decl)
            self.symbols.append(FunctionSymbol(name, params, value_sort, kind, span=self.span(decl)))

    def _sort_known(self, name: str) -> bool:
        return name in ("boolean", "nat", "step", "action") or any(s.name == name for s in self.sorts)

    # -- terms -----------------------------------------------------------

    def term(self, tree: Union[Tree, Token], variables: bool) -> Term:
        kind = tree.data
        if kind == "number":
            return Num(int(tree.children[0]))
        if kind == "variable":
            if not variables:
                raise self.fail(f"variable {tree.children[0]} is not allowed in a scenario", tree)
            return Var(str(tree.children[0]))
        if kind == "abstract":
            if variables:
                raise self.fail("abstract constants may only appear in a scenario", tree)
            return Abstract(str(tree.children[0])[1:])
        if kind in _ARITHMETIC:
            left, right = tree.children
            return BinOp(_OPERATORS[kind], self.term(left, variables), self.term(right, variables))
        if kind == "fterm":
            return self._named_term(tree, variables)
        raise self.fail(f"unexpected {kind}", tree)

    def _fterm_parts(self, tree: Tree, variables: bool) -> Tuple[str, List[Term]]:
        name = str(tree.children[0])
        args = [self.term(a, variables) for a in tree.children[1].children] if len(tree.children) > 1 else []
        return name, args

    def _named_term(self, tree: Tree, variables: bool) -> Term:
        name, args = self._fterm_parts(tree, variables)
        sig = self.signature
        symbol = sig.symbol(name)
        if name in ("true", "false") and not args:
            return TRUE if name == "true" else FALSE
        if symbol is not None and symbol.kind is SymbolKind.STATIC:
            self._check_args(name, args, symbol.params, tree)
            return StaticTerm(name, tuple(args))
        if symbol is not None and symbol.kind is SymbolKind.ACTION:
            self._check_args(name, args, symbol.params, tree)
            return Const(name, tuple(args))
        if symbol is not None:
            raise self.fail(f"fluent {name} cannot be used as a term", tree)
        if sig.constant_sort(name) is not None:
            if args:
                raise self.fail(f"object constant {name} takes no arguments", tree)
            return Const(name)
        raise self.fail(f"unknown symbol {name}", tree)

    def _check_args(self, name: str, args: List[Term], params: Tuple[str, ...], node: Tree) -> None:
        if len(args) != len(params):
            raise self.fail(f"{name} expects {len(params)} arguments, got {len(args)}", node)
        for arg, param in zip(args, params):
            if isinstance(arg, Const) and not self.signature.belongs(arg, param):
                raise self.fail(f"sort mismatch: {arg} is not of sort {param}", node)

    def _is_value_tree(self, tree: Tree) -> bool:
        """Whether the right side of a comparison is a plain value rather than arithmetic."""
        if tree.data in _ARITHMETIC:
            return False
        if tree.data == "fterm":
            symbol = self.signature.symbol(str(tree.children[0]))
            return symbol is None or symbol.kind is SymbolKind.ACTION
        return True

    def _is_atom_head(self, tree: Tree) -> bool:
        if tree.data != "fterm":
            return False
        name = str(tree.children[0])
        return name in (OCCURS, AB) or self.signature.symbol(name) is not None

    # -- literals ----------------------------------------------------------

    def literal(self, tree: Tree, variables: bool) -> Literal:
        if tree.data == "positive":
            return self.atom(tree.children[0], "=", TRUE, variables, boolean_sugar=True)
        if tree.data == "negative":
            return self.atom(tree.children[1], "=", FALSE, variables, boolean_sugar=True)
        left, rel, right = tree.children
        rel = str(rel)
        if rel in ("=", "!=") and self._is_atom_head(left) and self._is_value_tree(right):
            value = self.term(right, variables)
            return self.atom(left, rel, value, variables)
        return ArithmeticAtom(self.term(left, variables), rel, self.term(right, variables), span=self.span(tree))

    def atom(self, fterm: Tree, relation: str, value: Term, variables: bool, boolean_sugar: bool = False) -> Atom:
        name, args = self._fterm_parts(fterm, variables)
        span = self.span(fterm)
        sig = self.signature
        if name == OCCURS:
            if len(args) != 2:
                raise self.fail("occurs expects an action and a time-step", fterm)
            action, step = args
            if isinstance(action, Const) and sig.kind_of(action.name) is not SymbolKind.ACTION:
                raise self.fail(f"{action} is not an action", fterm)
            return Atom(OCCURS, (action,), step, relation, value, span=span)
        symbol = sig.symbol(name)
        if symbol is None:
            raise self.fail(f"unknown symbol {name}", fterm)
        expected = len(symbol.params) + (1 if symbol.time_dependent else 0)
        if len(args) != expected:
            raise self.fail(f"{name} expects {expected} arguments, got {len(args)}", fterm)
        params = args[: len(symbol.params)]
        self._check_args(name, params, symbol.params, fterm)
        step = args[-1] if symbol.time_dependent else None
        if boolean_sugar and symbol.value_sort != "boolean":
            raise self.fail(f"{name} is not boolean; write {name}(...) = value", fterm)
        if isinstance(value, Const) and not sig.belongs(value, symbol.value_sort):
            raise self.fail(f"sort mismatch: {value} is not of sort {symbol.value_sort}", fterm)
        if symbol.kind is SymbolKind.ACTION:
            return Atom(OCCURS, (Const(name, tuple(params)),), step, relation, value, span=span)
        return Atom(name, tuple(params), step, relation, value, span=span)

    # -- mechanisms --------------------------------------------------------

    def _mechanism(self, tree: Tree) -> None:
        label_tree, head_tree, *rest = tree.children
        label_name = str(label_tree.children[0])
        label_args = []
        if len(label_tree.children) > 1:
            label_args = [self.term(a, True) for a in label_tree.children[1].children]
        label = Const(label_name, tuple(label_args))

        head = self.literal(head_tree, True)
        if not isinstance(head, Atom):
            raise self.fail("the head of a mechanism must be an atom", head_tree)

        body: List[Literal] = []
        step: Optional[Term] = None
        for literal_tree in rest[0].children if rest else []:
            if literal_tree.data == "negative" and str(literal_tree.children[1].children[0]) == AB:
                step = self._guard_step(literal_tree.children[1], label)
                continue
            body.append(self.literal(literal_tree, True))

        if step is None:
            step = head.step if head.step is not None else Var("I")
        head, body = _normalize_static_terms(head, body)
        self.mechanisms.append(CausalMechanism(label, head, tuple(body), step, span=self.span(tree)))

    def _guard_step(self, fterm: Tree, label: Const) -> Term:
        args = fterm.children[1].children if len(fterm.children) > 1 else []
        if len(args) != 2 or args[0].data != "fterm":
            raise self.fail("ab expects a label and a time-step", fterm)
        label_tree, step_tree = args
        label_args = label_tree.children[1].children if len(label_tree.children) > 1 else []
        named = Const(str(label_tree.children[0]), tuple(self.term(a, True) for a in label_args))
        if named != label:
            raise self.fail(f"guard names {named}, not the mechanism's own label {label}", fterm)
        return self.term(step_tree, True)

    # -- scenario facts ----------------------------------------------------

    def _plain_fact(self, tree: Tree) -> None:
        literal = self.literal(tree.children[0], False)
        if isinstance(literal, ArithmeticAtom):
            self.constraints.append(literal)
            return
        if self.signature.kind_of(literal.symbol) is not SymbolKind.STATIC:
            raise self.fail("only statics, arithmetic atoms, init, do and obs may appear in a scenario", tree)
        self.statics.append(literal)

    def _init_fact(self, tree: Tree) -> None:
        for literal_tree in tree.children:
            if literal_tree.data == "positive":
                fterm, value = literal_tree.children[0], TRUE
            elif literal_tree.data == "negative":
                fterm, value = literal_tree.children[1], FALSE
            else:
                fterm, rel, value_tree = literal_tree.children
                if str(rel) != "=" or fterm.data != "fterm":
                    raise self.fail("init expects f = value", literal_tree)
                value = self.term(value_tree, False)
            name, args = self._fterm_parts(fterm, False)
            symbol = self.signature.symbol(name)
            if symbol is None:
                raise self.fail(f"unknown symbol {name}", fterm)
            if len(args) != len(symbol.params):
                raise self.fail(f"{name} expects {len(symbol.params)} arguments, got {len(args)}", fterm)
            self._check_args(name, args, symbol.params, fterm)
            self.inits.append(Init(name, tuple(args), value, span=self.span(literal_tree)))

    def _do_fact(self, tree: Tree) -> None:
        children = list(tree.children)
        positive = True
        if isinstance(children[0], Token):
            positive = False
            children.pop(0)
        action_tree, step_tree = children
        if action_tree.data != "fterm":
            raise self.fail("do requires an action", action_tree)
        name = str(action_tree.children[0])
        if self.signature.kind_of(name) is not SymbolKind.ACTION:
            raise self.fail(f"do requires an action; {name} is not one", action_tree)
        action = self.term(action_tree, False)
        step = self.term(step_tree, False)
        self.dos.append(Do(action, step, positive, span=self.span(tree)))

    def _obs_fact(self, tree: Tree) -> None:
        fluent_tree, value_tree, *step_tree = tree.children
        if fluent_tree.data != "fterm":
            raise self.fail("obs requires a fluent", fluent_tree)
        name = str(fluent_tree.children[0])
        kind = self.signature.kind_of(name)
        if kind is None or not kind.is_fluent:
            raise self.fail(f"obs requires a fluent; {name} is not one", fluent_tree)
        symbol = self.signature.symbol(name)
        args = [self.term(a, False) for a in fluent_tree.children[1].children] if len(fluent_tree.children) > 1 else []
        self._check_args(name, args, symbol.params, fluent_tree)
        value = self.term(value_tree, False)
        if isinstance(value, Const) and not self.signature.belongs(value, symbol.value_sort):
            raise self.fail(f"sort mismatch: {value} is not of sort {symbol.value_sort}", value_tree)
        step = self.term(step_tree[0], False) if step_tree else None
        if symbol.time_dependent and step is None:
            raise self.fail(f"obs of {name} needs a time-step", tree)
        if not symbol.time_dependent and step is not None:
            raise self.fail(f"{name} is time-independent; obs takes no time-step", tree)
        self.observations.append(Obs(name, tuple(args), value, step, span=self.span(tree)))


def _normalize_static_terms(head: Atom, body: List[Literal]) -> Tuple[Atom, List[Literal]]:
    """Replace static terms inside mechanism literals by variables bound through static atoms."""
    taken = set(head.variables())
    for literal in body:
        taken.update(literal.variables())
    bound: Dict[StaticTerm, Var] = {}
    counter = [0]

    def fresh() -> Var:
        while True:
            counter[0] += 1
            name = f"S{counter[0]}"
            if name not in taken:
                taken.add(name)
                return Var(name)

    def rewrite(term: Term, prefix: List[Literal]) -> Term:
        if isinstance(term, StaticTerm):
            args = tuple(rewrite(a, prefix) for a in term.args)
            key = StaticTerm(term.symbol, args)
            if key not in bound:
                bound[key] = fresh()
                prefix.append(Atom(term.symbol, args, None, "=", bound[key]))
            return bound[key]
        if isinstance(term, BinOp):
            return BinOp(term.op, rewrite(term.left, prefix), rewrite(term.right, prefix))
        if isinstance(term, Const) and term.args:
            return Const(term.name, tuple(rewrite(a, prefix) for a in term.args))
        return term

    def rewrite_literal(literal: Literal, prefix: List[Literal]) -> Literal:
        if isinstance(literal, ArithmeticAtom):
            return ArithmeticAtom(rewrite(literal.left, prefix), literal.op, rewrite(literal.right, prefix), span=literal.span)
        step = rewrite(literal.step, prefix) if literal.step is not None else None
        return Atom(
            literal.symbol,
            tuple(rewrite(a, prefix) for a in literal.args),
            step,
            literal.relation,
            rewrite(literal.value, prefix),
            span=literal.span,
        )

    head_prefix: List[Literal] = []
    new_head = rewrite_literal(head, head_prefix)
    new_body: List[Literal] = list(head_prefix)
    for literal in body:
        prefix: List[Literal] = []
        rewritten = rewrite_literal(literal, prefix)
        new_body.extend(prefix)
        new_body.append(rewritten)
    return new_head, new_body


def parse_theory(text: str, file: str = "<input>") -> CausalTheory:
    """Parse a background theory followed by an optional scenario.

    Args:
        text: Source text in W surface syntax
        file: Name used in source spans

    Returns:
        The parsed theory with shorthands expanded

    Raises:
        ParseFailed: carrying every ParseError found
    """
    tree = _parse_tree(text, file)
    builder = _TheoryBuilder(file)
    builder.build(tree)
    if builder.errors:
        raise ParseFailed(builder.errors)
    theory = CausalTheory(builder.signature, tuple(builder.mechanisms), builder.scenario())
    logger.info(
        f"parsed {file}: {len(theory.signature.symbols)} symbols, "
        f"{len(theory.mechanisms)} mechanisms, {len(theory.scenario.abstract_constants)} abstract constants"
    )
    return theory


def parse_scenario(text: str, signature: Signature, file: str = "<input>") -> Scenario:
    """Parse scenario facts against an existing signature."""
    tree = _parse_tree(text, file)
    builder = _TheoryBuilder(file, signature)
    builder.build(tree)
    if builder.errors:
        raise ParseFailed(builder.errors)
    return builder.scenario()


def parse_observation(text: str, signature: Signature) -> Obs:
    """Parse a single obs(...) fact, as given on the command line."""
    text = text.strip()
    if not text.endswith("."):
        text += "."
    scenario = parse_scenario(text, signature, file="<obs>")
    if len(scenario.observations) != 1 or len(list(scenario)) != 1:
        span = SourceSpan("<obs>", 1, 1, 1, max(len(text), 1))
        raise ParseFailed([ParseError(span, "expected a single obs(f, value[, step]) fact")])
    return scenario.observations[0]


def parse_file(path: Union[str, Path]) -> CausalTheory:
    """Read and parse a .w file; OSError propagates to the caller."""
    path = Path(path)
    return parse_theory(path.read_text(encoding="utf-8"), file=str(path))


def parse_files(paths: List[Union[str, Path]]) -> CausalTheory:
    """Parse several files as one theory, concatenated in the given order."""
    texts = [Path(p).read_text(encoding="utf-8") for p in paths]
    name = str(paths[0]) if len(paths) == 1 else "+".join(str(p) for p in paths)
    return parse_theory("\n".join(texts), file=name)


# ---------------------------------------------------------------------------
# Pretty-printing


def _declaration(symbol: FunctionSymbol) -> str:
    text = symbol.name
    if symbol.params:
        text += f"({', '.join(symbol.params)})"
    if symbol.value_sort != "boolean":
        text += f" : {symbol.value_sort}"
    return text


def format_scenario(scenario: Scenario) -> str:
    lines = []
    lines.extend(f"{atom}." for atom in scenario.statics)
    lines.extend(f"{constraint}." for constraint in scenario.constraints)
    lines.extend(f"{init}." for init in scenario.inits)
    lines.extend(f"{do}." for do in scenario.dos)
    lines.extend(f"{obs}." for obs in scenario.observations)
    return "\n".join(lines) + ("\n" if lines else "")


def format_theory(theory: CausalTheory) -> str:
    """Render a theory in surface syntax; parsing the result gives an equal theory."""
    lines = []
    for sort in theory.signature.sorts:
        lines.append(f"sorts {sort.name} = {{{', '.join(sort.values)}}}.")
    for symbol in theory.signature.symbols:
        if symbol.kind is SymbolKind.STATIC:
            lines.append(f"statics {_declaration(symbol)}.")
        elif symbol.kind is SymbolKind.ACTION:
            lines.append(f"actions {_declaration(symbol)}.")
        else:
            lines.append(f"fluents {symbol.kind.value} {_declaration(symbol)}.")
    lines.extend(str(m) for m in theory.mechanisms)
    lines.append("scenario.")
    return "\n".join(lines) + "\n" + format_scenario(theory.scenario)

