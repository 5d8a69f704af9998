//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use cheriot_core::capability::{Capability, PermissionSet, LEGAL_EXPONENTS};

// ---------------------------------------------------------------------------
// Bounds decompression as pseudocode, run by a small interpreter over
// unbounded integers.

pub const ALG1: &str = "
a_mid = (a >> E) & 0x1FF
a_hi = a_mid <u B
t_hi = T <u B
c_b = 0 - a_hi
c_t = t_hi - a_hi
a_top = a >> (E + 9)
b = trunc32((((a_top + c_b) << 9) | B) << E)
t = trunc33((((a_top + c_t) << 9) | T) << E)
";

#[derive(Clone, Debug)]
enum Expr {
    Num(i128),
    Var(usize),
    Bin(Op, Box<Expr>, Box<Expr>),
    Trunc(u32, Box<Expr>),
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Shr,
    Shl,
    And,
    Or,
    Add,
    Sub,
    LtU,
}

/// Compiled pseudocode: straight-line assignments over named variables.
pub struct Program {
    names: Vec<String>,
    stmts: Vec<(usize, Expr)>,
}

struct Parser<'a> {
    toks: Vec<&'a str>,
    pos: usize,
}

fn tokenize(line: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let b = line.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_alphanumeric() || c == b'_' {
            let s = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push(&line[s..i]);
        } else {
            let two = line.get(i..i + 2).unwrap_or("");
            let n = if [">>", "<<", "<u"].contains(&two) { 2 } else { 1 };
            out.push(&line[i..i + n]);
            i += n;
        }
    }
    out
}

impl Program {
    pub fn parse(src: &str) -> Program {
        let mut p = Program { names: Vec::new(), stmts: Vec::new() };
        for line in src.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (lhs, rhs) = line.split_once('=').expect("assignment");
            let mut ps = Parser { toks: tokenize(rhs), pos: 0 };
            let e = ps.expr(&mut p.names, 0);
            assert_eq!(ps.pos, ps.toks.len(), "trailing tokens in `{line}`");
            let v = p.var(lhs.trim());
            p.stmts.push((v, e));
        }
        p
    }

    fn var(&mut self, name: &str) -> usize {
        var_index(&mut self.names, name)
    }

    /// Runs the program with `inputs` bound and returns the named outputs.
    pub fn run(&self, inputs: &[(&str, i128)], outputs: &[&str]) -> Vec<i128> {
        let mut env = vec![None; self.names.len()];
        for (n, v) in inputs {
            let i = self.names.iter().position(|x| x == n).expect("input used by program");
            env[i] = Some(*v);
        }
        for (v, e) in &self.stmts {
            env[*v] = Some(eval(e, &env));
        }
        outputs
            .iter()
            .map(|n| env[self.names.iter().position(|x| x == n).expect("output")].expect("assigned"))
            .collect()
    }
}

fn var_index(names: &mut Vec<String>, name: &str) -> usize {
    match names.iter().position(|x| x == name) {
        Some(i) => i,
        None => {
            names.push(name.to_string());
            names.len() - 1
        }
    }
}

fn eval(e: &Expr, env: &[Option<i128>]) -> i128 {
    match e {
        Expr::Num(n) => *n,
        Expr::Var(v) => env[*v].expect("variable bound before use"),
        Expr::Trunc(bits, x) => eval(x, env) & ((1i128 << bits) - 1),
        Expr::Bin(op, l, r) => {
            let (l, r) = (eval(l, env), eval(r, env));
            match op {
                Op::Shr => l >> r,
                Op::Shl => l << r,
                Op::And => l & r,
                Op::Or => l | r,
                Op::Add => l + r,
                Op::Sub => l - r,
                Op::LtU => {
                    assert!(l >= 0 && r >= 0, "unsigned compare of negative value");
                    i128::from(l < r)
                }
            }
        }
    }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).copied()
    }

    fn next(&mut self) -> &'a str {
        let t = self.toks[self.pos];
        self.pos += 1;
        t
    }

    // Precedence, loosest first: <u, |, &, shifts, additive.
    fn expr(&mut self, names: &mut Vec<String>, level: usize) -> Expr {
        const LEVELS: [&[(&str, Op)]; 5] = [
            &[("<u", Op::LtU)],
            &[("|", Op::Or)],
            &[("&", Op::And)],
            &[(">>", Op::Shr), ("<<", Op::Shl)],
            &[("+", Op::Add), ("-", Op::Sub)],
        ];
        if level == LEVELS.len() {
            return self.atom(names);
        }
        let mut lhs = self.expr(names, level + 1);
        while let Some(&(_, op)) = self.peek().and_then(|t| LEVELS[level].iter().find(|(s, _)| *s == t)) {
            self.next();
            let rhs = self.expr(names, level + 1);
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        lhs
    }

    fn atom(&mut self, names: &mut Vec<String>) -> Expr {
        let t = self.next();
        if t == "(" {
            let e = self.expr(names, 0);
            assert_eq!(self.next(), ")");
            return e;
        }
        if let Some(bits) = t.strip_prefix("trunc") {
            assert_eq!(self.next(), "(");
            let e = self.expr(names, 0);
            assert_eq!(self.next(), ")");
            return Expr::Trunc(bits.parse().expect("trunc width"), Box::new(e));
        }
        if let Some(h) = t.strip_prefix("0x") {
            return Expr::Num(i128::from_str_radix(h, 16).expect("hex"));
        }
        if t.as_bytes()[0].is_ascii_digit() {
            return Expr::Num(t.parse().expect("number"));
        }
        Expr::Var(var_index(names, t))
    }
}

/// Result of the pseudocode for one input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Alg1Out {
    pub base: u64,
    pub top: u64,
    pub c_b: i64,
    pub c_t: i64,
}

pub fn alg1() -> Program {
    Program::parse(ALG1)
}

pub fn alg1_eval(p: &Program, a: u32, e: u8, b: u16, t: u16) -> Alg1Out {
    let r = p.run(
        &[("a", a.into()), ("E", e.into()), ("B", b.into()), ("T", t.into())],
        &["b", "t", "c_b", "c_t"],
    );
    Alg1Out { base: r[0] as u64, top: r[1] as u64, c_b: r[2] as i64, c_t: r[3] as i64 }
}

pub fn cap(a: u32, e: u8, b: u16, t: u16) -> Capability {
    Capability { tag: true, address: a, exponent: e, b_field: b, t_field: t, ..Capability::NULL }
}

// ---------------------------------------------------------------------------
// Boundary value grids.

fn fill(mut set: BTreeSet<u64>, n: usize, max: u64) -> Vec<u64> {
    let mut step = max / (n as u64) | 1;
    let mut x = step / 2;
    while set.len() < n {
        set.insert(x % (max + 1));
        x = x.wrapping_add(step);
        if x > max {
            step = step / 2 + 1;
            x %= max + 1;
        }
    }
    set.into_iter().take(n).collect()
}

/// 64 nine-bit field values around 0, powers of two and the maximum.
pub fn field_grid() -> Vec<u16> {
    let mut s = BTreeSet::new();
    for k in 0..9 {
        for d in [-1i64, 0, 1] {
            s.insert(((1i64 << k) + d).rem_euclid(512) as u64);
        }
    }
    for v in [0, 2, 3, 0x1FE, 0x1FF, 0xFF, 0x100, 0x101, 0x1F0, 0x10, 0xF0, 0x110] {
        s.insert(v);
    }
    fill(s, 64, 0x1FF).into_iter().map(|v| v as u16).collect()
}

/// 64 address values around 0, powers of two and the top of the space.
pub fn address_grid() -> Vec<u32> {
    let mut s = BTreeSet::new();
    for k in (0..32).step_by(3) {
        for d in [-1i64, 0, 1] {
            s.insert(((1i64 << k) + d).rem_euclid(1 << 32) as u64);
        }
    }
    for v in [0, 0xFFFF_FFFF, 0xFFFF_FFFE, 0x8000_0000, 0x7FFF_FFFF, 0x1F5, 0x200, 0xFFFF_FE00] {
        s.insert(v);
    }
    fill(s, 64, 0xFFFF_FFFF).into_iter().map(|v| v as u32).collect()
}

pub fn exponents() -> [u8; 16] {
    LEGAL_EXPONENTS
}

// ---------------------------------------------------------------------------
// Bounds-setting minimality by search.

/// A region with exponent at most 3 that contains `[a, a + len)`, is
/// strictly shorter than `result_len`, and decodes exactly with address `a`.
pub fn smaller_superset(p: &Program, a: u32, len: u32, result_len: u64) -> Option<(u8, u64, u64)> {
    let (lo, hi) = (i128::from(a), i128::from(a) + i128::from(len));
    let limit = i128::from(result_len);
    for e in 0..=3u8 {
        let g = 1i128 << e;
        let mut base = lo / g * g;
        while base >= 0 && hi - base < limit {
            let mut top = (hi + g - 1) / g * g;
            while top - base < limit {
                let (b, t) = (((base >> e) & 0x1FF) as u16, ((top >> e) & 0x1FF) as u16);
                let d = alg1_eval(p, a, e, b, t);
                if i128::from(d.base) == base && i128::from(d.top) == top {
                    return Some((e, base as u64, top as u64));
                }
                top += g;
            }
            base -= g;
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Permission table, written out independently of the codec.

/// Expanded set of every 6-bit code: kind in the low two bits.
pub fn perm_table(code: u8) -> PermissionSet {
    use PermissionSet as P;
    let flags = code >> 2;
    let bit = |i: u8| flags & (1 << i) != 0;
    let mut s = P::empty();
    match code & 3 {
        0 => {
            for (i, p) in [P::STORE, P::LOAD, P::CAP_ACCESS, P::GLOBAL].into_iter().enumerate() {
                if bit(i as u8) {
                    s |= p;
                }
            }
        }
        1 => {
            s |= P::EXECUTE;
            for (i, p) in [P::SYSTEM_REGISTERS, P::LOAD, P::CAP_ACCESS, P::GLOBAL].into_iter().enumerate() {
                if bit(i as u8) {
                    s |= p;
                }
            }
        }
        2 => {
            for (i, p) in [P::empty(), P::SEAL, P::UNSEAL, P::GLOBAL].into_iter().enumerate() {
                if bit(i as u8) {
                    s |= p;
                }
            }
        }
        _ => {}
    }
    s
}

/// Every expanded set some code decodes to.
pub fn representable_sets() -> BTreeSet<u8> {
    (0..64u8).map(|c| perm_table(c).bits()).collect()
}
