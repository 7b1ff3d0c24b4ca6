"""Text format for gates: s-expression strings used by the CLI and for
serialising channel descriptions.

Grammar (whitespace separated, case sensitive)::

    expr     := "(" head ... ")"
    head     := displace | squeeze | rotate | shear | cubic | cp | bs
              | kerr | identity | exp | seq
    (displace q0 p0 [mode])        phase-space displacement R(q0, p0)
    (squeeze r [mode])             one-mode squeezer
    (rotate theta [mode])          phase-space rotation
    (shear s [mode])               quadratic phase
    (cubic gamma [mode])           cubic phase gate
    (cp [i j])                     controlled phase gate
    (bs [i j])                     balanced beamsplitter
    (kerr kappa [mode])            Kerr interaction
    (identity [nmodes])
    (exp (poly "TERMS") strength)  exp(i * strength * H)
    (seq expr expr ...)            composition in circuit order

Polynomial term strings are sums like ``"q^3"``, ``"0.5 q0 p1^2"`` or
``"q p - 0.5i"``: factors are ``q``/``p`` with an optional mode index and
``^power``; coefficients are floats with an optional trailing ``i``.
``format_gate`` renders gates back into this grammar; one parse/format pass
normalises an expression, after which the round trip is exact.
"""

from __future__ import annotations

import re

from .algebra import CanonicalPolynomial, identity as poly_identity, p, q
from . import gates as g


class GateExpressionError(ValueError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------

_FACTOR_RE = re.compile(r"(q|p)(\d*)(?:\^(\d+))?$")
_COEFF_RE = re.compile(r"[+-]?(\d+\.?\d*([eE][+-]?\d+)?|\.\d+)?i?$")


def parse_polynomial(text):
    """Parse a polynomial term string into a CanonicalPolynomial."""
    cleaned = text.replace("-", " - ").replace("+", " + ")
    # keep exponent signs like 1e-3 intact
    cleaned = re.sub(r"([eE]) ([+-]) (\d)", r"\1\2\3", cleaned)
    tokens = cleaned.split()
    terms = []  # (sign, [token, ...])
    current = []
    sign = 1.0
    pending_sign = 1.0
    for tok in tokens:
        if tok in "+-":
            if current:
                terms.append((sign, current))
                current = []
            pending_sign = 1.0 if tok == "+" else -1.0
            sign = pending_sign
        else:
            if not current:
                sign = pending_sign
                pending_sign = 1.0
            current.append(tok)
    if current:
        terms.append((sign, current))
    if not terms:
        raise GateExpressionError("empty polynomial")
    nmodes = 1
    parsed = []
    for sgn, toks in terms:
        coeff = complex(sgn)
        factors = []
        for tok in toks:
            m = _FACTOR_RE.match(tok)
            if m:
                kind, idx, power = m.group(1), m.group(2), m.group(3)
                mode = int(idx) if idx else 0
                factors.append((kind, mode, int(power) if power else 1))
                nmodes = max(nmodes, mode + 1)
                continue
            if _COEFF_RE.match(tok) and any(ch.isdigit() or ch == "i" for ch in tok):
                if tok.endswith("i"):
                    num = tok[:-1]
                    coeff *= 1j * (float(num) if num not in ("", "+", "-")
                                   else (-1.0 if num == "-" else 1.0))
                else:
                    coeff *= float(tok)
                continue
            raise GateExpressionError(f"bad polynomial token {tok!r}")
        parsed.append((coeff, factors))
    out = CanonicalPolynomial.zero(nmodes)
    for coeff, factors in parsed:
        term = poly_identity(nmodes, coeff)
        for kind, mode, power in factors:
            base = q(mode, nmodes) if kind == "q" else p(mode, nmodes)
            for _ in range(power):
                term = term * base
        out = out + term
    return out


def format_polynomial(poly):
    if not poly.terms:
        return "0"
    single = poly.nmodes == 1
    bits = []
    for key in sorted(poly.terms, key=lambda k: (sum(a + b for a, b in k), k)):
        coeff = poly.terms[key]
        factors = []
        for mode, (a, b) in enumerate(key):
            name_q = "q" if single else f"q{mode}"
            name_p = "p" if single else f"p{mode}"
            if a:
                factors.append(name_q + (f"^{a}" if a > 1 else ""))
            if b:
                factors.append(name_p + (f"^{b}" if b > 1 else ""))
        if coeff.imag == 0:
            cs = repr(coeff.real)
        elif coeff.real == 0:
            cs = repr(coeff.imag) + "i"
        else:
            cs = f"{coeff.real!r}+{coeff.imag!r}i".replace("+-", "-")
        body = " ".join([cs] + factors) if factors else cs
        if not factors and coeff.imag == 0 and coeff.real == 1:
            body = "1.0"
        bits.append(body)
    return " + ".join(bits)


# ---------------------------------------------------------------------------
# s-expressions
# ---------------------------------------------------------------------------

def _tokenize(text):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            tokens.append((ch, i))
            i += 1
        elif ch == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise GateExpressionError("unterminated string", i)
            tokens.append((text[i: j + 1], i))
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in '()"':
                j += 1
            tokens.append((text[i:j], i))
            i = j
    return tokens


def _parse_sexpr(tokens, pos):
    if pos >= len(tokens):
        raise GateExpressionError("unexpected end of input")
    tok, at = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while True:
            if pos >= len(tokens):
                raise GateExpressionError("missing closing paren", at)
            if tokens[pos][0] == ")":
                return items, pos + 1
            item, pos = _parse_sexpr(tokens, pos)
            items.append(item)
    if tok == ")":
        raise GateExpressionError("unexpected ')'", at)
    return (tok, at), pos + 1


def _atom_float(item, what):
    if isinstance(item, list):
        raise GateExpressionError(f"{what} must be a number")
    tok, at = item
    try:
        return float(tok)
    except ValueError:
        raise GateExpressionError(f"{what} must be a number, got {tok!r}", at)


def _atom_int(item, what):
    val = _atom_float(item, what)
    if val != int(val):
        raise GateExpressionError(f"{what} must be an integer")
    return int(val)


def _build(node):
    if not isinstance(node, list):
        tok, at = node
        raise GateExpressionError(f"expected a gate expression, got {tok!r}", at)
    if not node:
        raise GateExpressionError("empty expression")
    head_tok, head_at = node[0]
    args = node[1:]

    def arity(lo, hi):
        if not lo <= len(args) <= hi:
            raise GateExpressionError(
                f"{head_tok} takes {lo}..{hi} arguments, got {len(args)}", head_at)

    if head_tok == "displace":
        arity(2, 3)
        mode = _atom_int(args[2], "mode") if len(args) > 2 else 0
        return g.displacement_gate(_atom_float(args[0], "q0"),
                                   _atom_float(args[1], "p0"), mode=mode)
    if head_tok in ("squeeze", "rotate", "shear", "cubic", "kerr"):
        arity(1, 2)
        val = _atom_float(args[0], "parameter")
        mode = _atom_int(args[1], "mode") if len(args) > 1 else 0
        ctor = {"squeeze": g.squeezer, "rotate": g.rotation_gate,
                "shear": g.shear_gate, "cubic": g.cubic_phase_gate,
                "kerr": g.kerr_gate}[head_tok]
        return ctor(val, mode=mode)
    if head_tok == "cp":
        arity(0, 2)
        i = _atom_int(args[0], "mode") if args else 0
        j = _atom_int(args[1], "mode") if len(args) > 1 else 1
        return g.controlled_phase_gate(i, j)
    if head_tok == "bs":
        arity(0, 2)
        i = _atom_int(args[0], "mode") if args else 0
        j = _atom_int(args[1], "mode") if len(args) > 1 else 1
        return g.beamsplitter_gate(i, j)
    if head_tok == "identity":
        arity(0, 1)
        n = _atom_int(args[0], "nmodes") if args else 1
        return g.identity_gate(n)
    if head_tok == "exp":
        arity(2, 2)
        poly_node = args[0]
        if (not isinstance(poly_node, list) or not poly_node
                or poly_node[0][0] != "poly"):
            raise GateExpressionError("exp needs (poly \"...\") as first argument",
                                      head_at)
        if len(poly_node) != 2 or isinstance(poly_node[1], list):
            raise GateExpressionError("poly takes one string argument", head_at)
        text_tok, text_at = poly_node[1]
        if not (text_tok.startswith('"') and text_tok.endswith('"')):
            raise GateExpressionError("poly argument must be quoted", text_at)
        poly = parse_polynomial(text_tok[1:-1])
        strength = _atom_float(args[1], "strength")
        if not poly.is_hermitian():
            raise GateExpressionError("generator is not Hermitian", text_at)
        return g.Exponential(poly, strength)
    if head_tok == "seq":
        if not args:
            raise GateExpressionError("seq needs at least one gate", head_at)
        gates = [_build(a) for a in args]
        n = max(gate.nmodes for gate in gates)
        gates = [gate if gate.nmodes == n
                 else g.embed_gate(gate, n, tuple(range(gate.nmodes)))
                 for gate in gates]
        return g.GateSequence(tuple(gates))
    raise GateExpressionError(f"unknown gate {head_tok!r}", head_at)


def parse_gate_expression(text):
    """Parse a gate expression string into a gate."""
    tokens = _tokenize(text)
    if not tokens:
        raise GateExpressionError("empty input")
    node, pos = _parse_sexpr(tokens, 0)
    if pos != len(tokens):
        raise GateExpressionError("trailing input", tokens[pos][1])
    return _build(node)


def _fmt_num(x):
    return repr(float(x))


def _as_displacement(gate):
    """(q0, p0, mode) if the gate is a pure displacement, else None."""
    gen = gate.generator * gate.strength
    if gen.degree > 1:
        return None
    q0 = p0 = 0.0
    mode = 0
    for key, coeff in gen.terms.items():
        if sum(a + b for a, b in key) == 0:
            return None  # scalar phase present; keep exponential form
        if abs(coeff.imag) > 0:
            return None
        mode = next(i for i, ab in enumerate(key) if ab != (0, 0))
        a, b = key[mode]
        if b:
            q0 = -coeff.real
        else:
            p0 = coeff.real
    return q0, p0, mode


def format_gate(gate):
    """Render a gate in the expression grammar (normal form)."""
    if isinstance(gate, g.GateSequence):
        return "(seq " + " ".join(format_gate(x) for x in gate.gates) + ")"
    if isinstance(gate, g.AffineSymplectic):
        return format_gate(g.affine_to_exponential(gate))
    if isinstance(gate, g.Exponential):
        disp = _as_displacement(gate)
        if disp is not None:
            q0, p0, mode = disp
            tail = f" {mode}" if mode else ""
            return f"(displace {_fmt_num(q0)} {_fmt_num(p0)}{tail})"
        return (f'(exp (poly "{format_polynomial(gate.generator)}") '
                f"{_fmt_num(gate.strength)})")
    raise TypeError(f"not a gate: {gate!r}")
