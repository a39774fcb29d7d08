//! The printed example tables for k=4, r=2, d=5, e=1, parsed from their
//! formulas and compared cell by cell with the encoder applied to unit
//! inputs. Shared by the core tests and the acceptance runner.

use std::collections::BTreeMap;

use xmds::evenodd::CodeParams;
use xmds::multilayer::MultilayerCode;
use xmds::transform::{apply_layer, systematic_transform, Coupling, TransformSpec};
use xmds::{Modulus, RingElement};

type Form = BTreeMap<(usize, usize), RingElement>;

/// A parsed expression: either a pure ring constant or a linear form in the
/// symbols `a_{i,j}`.
#[derive(Clone, Debug)]
enum Value {
    Const(RingElement),
    Linear(Form),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    m: Modulus,
    p: u32,
}

impl Parser<'_> {
    fn new(src: &str, m: Modulus, p: u32) -> Parser<'_> {
        Parser {
            src: src.as_bytes(),
            pos: 0,
            m,
            p,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) {
        assert_eq!(
            self.peek(),
            Some(c),
            "at {} in {:?}",
            self.pos,
            std::str::from_utf8(self.src)
        );
        self.pos += 1;
    }

    fn number(&mut self) -> u32 {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .unwrap()
    }

    /// Exponent after `^`: a digit or `{p-1}` / `{N}`.
    fn exponent(&mut self) -> u32 {
        if self.peek() == Some(b'{') {
            self.eat(b'{');
            let e = if self.peek() == Some(b'p') {
                self.eat(b'p');
                self.eat(b'-');
                self.p - self.number()
            } else {
                self.number()
            };
            self.eat(b'}');
            e
        } else {
            self.number()
        }
    }

    fn parse(mut self) -> Form {
        match self.expr() {
            Value::Linear(f) => f,
            Value::Const(_) => panic!("formula has no symbols"),
        }
    }

    fn expr(&mut self) -> Value {
        let mut acc = self.term();
        while self.peek() == Some(b'+') {
            self.eat(b'+');
            acc = add(acc, self.term());
        }
        acc
    }

    fn term(&mut self) -> Value {
        let mut acc = self.factor();
        while matches!(self.peek(), Some(b'x' | b'a' | b'(')) {
            let next = self.factor();
            acc = mul(acc, next);
        }
        acc
    }

    fn factor(&mut self) -> Value {
        match self.peek() {
            Some(b'(') => {
                self.eat(b'(');
                let v = self.expr();
                self.eat(b')');
                v
            }
            Some(b'1') => {
                self.eat(b'1');
                Value::Const(RingElement::one(self.m))
            }
            Some(b'x') => {
                self.eat(b'x');
                let e = if self.peek() == Some(b'^') {
                    self.eat(b'^');
                    self.exponent()
                } else {
                    1
                };
                Value::Const(RingElement::monomial(self.m, e))
            }
            Some(b'a') => {
                self.eat(b'a');
                self.eat(b'_');
                self.eat(b'{');
                let i = self.number() as usize;
                self.eat(b',');
                let j = self.number() as usize;
                self.eat(b'}');
                Value::Linear(BTreeMap::from([((i, j), RingElement::one(self.m))]))
            }
            other => panic!("unexpected {:?}", other.map(char::from)),
        }
    }
}

fn add(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Const(x), Value::Const(y)) => Value::Const(x + y),
        (Value::Linear(mut f), Value::Linear(g)) => {
            for (k, v) in g {
                let e = f.entry(k).or_insert(RingElement::zero(v.modulus()));
                *e += v;
            }
            f.retain(|_, v| !v.is_zero());
            Value::Linear(f)
        }
        _ => panic!("adding a constant to a linear form"),
    }
}

fn mul(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Const(x), Value::Const(y)) => Value::Const(x * y),
        (Value::Const(c), Value::Linear(f)) | (Value::Linear(f), Value::Const(c)) => {
            let mut f: Form = f.into_iter().map(|(k, v)| (k, v * c)).collect();
            f.retain(|_, v| !v.is_zero());
            Value::Linear(f)
        }
        _ => panic!("product of two linear forms"),
    }
}

pub fn formula(src: &str, p: u32) -> Form {
    let clean: String = src.chars().filter(|c| !c.is_whitespace()).collect();
    Parser::new(&clean, Modulus::evenodd(p).unwrap(), p).parse()
}

/// Cell `(col, row)` of a linear encoder, as a form over its inputs.
fn symbolic<F>(inputs: &[(usize, usize)], encode: F) -> BTreeMap<(usize, usize), Form>
where
    F: Fn((usize, usize)) -> Vec<Vec<RingElement>>,
{
    let mut cells: BTreeMap<(usize, usize), Form> = BTreeMap::new();
    for &s in inputs {
        for (c, col) in encode(s).iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                let cell = cells.entry((c, r)).or_default();
                if !v.is_zero() {
                    cell.insert(s, *v);
                }
            }
        }
    }
    cells
}

fn info_symbols(k: usize, rows: usize) -> Vec<(usize, usize)> {
    (0..k)
        .flat_map(|i| (0..rows).map(move |j| (i, j)))
        .collect()
}

fn systematic_cells(p: u32, layers: usize) -> BTreeMap<(usize, usize), Form> {
    let params = CodeParams::new(4, 2, 5, p, 1, layers).unwrap();
    let code = MultilayerCode::new(params, None).unwrap();
    let (m, rows) = (params.modulus(), code.rows());
    symbolic(&info_symbols(4, rows), |(i, j)| {
        let mut info = vec![vec![RingElement::zero(m); rows]; 4];
        info[i][j] = RingElement::one(m);
        code.encode(&info).unwrap().columns
    })
}

fn check(
    cells: &BTreeMap<(usize, usize), Form>,
    expected: &[(usize, usize, &str)],
    p: u32,
) -> Result<(), String> {
    for &(col, row, src) in expected {
        if cells[&(col, row)] != formula(src, p) {
            return Err(format!(
                "column {col} row {row} differs from {src:?} at p={p}"
            ));
        }
    }
    Ok(())
}

/// Cells not listed must hold their own symbol unchanged.
fn check_identity(
    cells: &BTreeMap<(usize, usize), Form>,
    columns: std::ops::Range<usize>,
    rows: usize,
    p: u32,
) -> Result<(), String> {
    for c in columns {
        for r in 0..rows {
            if cells[&(c, r)] != formula(&format!("a_{{{c},{r}}}"), p) {
                return Err(format!("column {c} row {r} is not a_{{{c},{r}}}"));
            }
        }
    }
    Ok(())
}

const PRIMES: [u32; 3] = [5, 7, 11];

const TABLE_A: [(usize, usize, &str); 4] = [
    (
        4,
        0,
        "a_{0,0}+x^{p-1}a_{1,0}+x^{p-1}a_{0,1}+a_{2,0}+a_{3,0}",
    ),
    (5, 0, "a_{0,0}+a_{1,0}+a_{0,1}+x^2a_{2,0}+x^3a_{3,0}"),
    (
        4,
        1,
        "x^{p-1}a_{0,1}+(1+x^{p-1})a_{1,0}+a_{1,1}+a_{2,1}+a_{3,1}",
    ),
    (
        5,
        1,
        "x^{p-1}a_{0,1}+(1+x^{p-1})a_{1,0}+xa_{1,1}+x^2a_{2,1}+x^3a_{3,1}",
    ),
];

/// Single layer, systematic form via the multilayer encoder.
pub fn single_layer_systematic_table() -> Result<(), String> {
    for p in PRIMES {
        check(&systematic_cells(p, 1), &TABLE_A, p)?;
    }
    Ok(())
}

/// Single layer through the closed-form systematic transform.
pub fn single_layer_via_closed_form() -> Result<(), String> {
    for p in PRIMES {
        let params = CodeParams::new(4, 2, 5, p, 1, 0).unwrap();
        let m = params.modulus();
        let spec = TransformSpec::with_default(&params, 0, true).unwrap();
        let cells = symbolic(&info_symbols(4, 2), |(i, j)| {
            let mut info = vec![vec![RingElement::zero(m); 2]; 4];
            info[i][j] = RingElement::one(m);
            systematic_transform(&params, &info, &spec).unwrap().columns
        });
        check(&cells, &TABLE_A, p)?;
    }
    Ok(())
}

/// Two layers of the first transformation on arbitrary instance symbols.
pub fn two_layers_of_the_first_transformation() -> Result<(), String> {
    // Every cell of the 6-column, 4-instance array is an input symbol.
    let expected: [(usize, usize, &str); 16] = [
        (0, 0, "a_{0,0}"),
        (1, 0, "a_{1,0}+a_{0,1}"),
        (2, 0, "a_{2,0}"),
        (3, 0, "a_{3,0}+a_{2,2}"),
        (0, 1, "a_{0,1}+(1+x)a_{1,0}"),
        (1, 1, "a_{1,1}"),
        (2, 1, "a_{2,1}"),
        (3, 1, "a_{3,1}+a_{2,3}"),
        (0, 2, "a_{0,2}"),
        (1, 2, "a_{1,2}+a_{0,3}"),
        (2, 2, "a_{2,2}+(1+x)a_{3,0}"),
        (3, 2, "a_{3,2}"),
        (0, 3, "a_{0,3}+(1+x)a_{1,2}"),
        (1, 3, "a_{1,3}"),
        (2, 3, "a_{2,3}+(1+x)a_{3,1}"),
        (3, 3, "a_{3,3}"),
    ];
    for p in PRIMES {
        let m = Modulus::evenodd(p).unwrap();
        let coupling = Coupling::default_for(m, 1).unwrap();
        let cells = symbolic(&info_symbols(6, 4), |(i, j)| {
            let mut cols = vec![vec![RingElement::zero(m); 4]; 6];
            cols[i][j] = RingElement::one(m);
            apply_layer(&mut cols, &[0, 1], 1, &coupling);
            apply_layer(&mut cols, &[2, 3], 2, &coupling);
            cols
        });
        check(&cells, &expected, p)?;
        check_identity(&cells, 4..6, 4, p)?;
    }
    Ok(())
}

const FIRST2: [(usize, usize, &str); 8] = [
    (
        4,
        0,
        "a_{0,0}+(x^{p-1}a_{1,0}+x^{p-1}a_{0,1})+a_{2,0}+(x^{p-1}a_{3,0}+x^{p-1}a_{2,2})",
    ),
    (
        4,
        1,
        "x^{p-1}a_{0,1}+(1+x^{p-1})a_{1,0}+a_{1,1}+a_{2,1}+x^{p-1}a_{3,1}+x^{p-1}a_{2,3}",
    ),
    (
        4,
        2,
        "a_{0,2}+(x^{p-1}a_{1,2}+x^{p-1}a_{0,3})+x^{p-1}a_{2,2}+(1+x^{p-1})a_{3,0}+a_{3,2}",
    ),
    (
        4,
        3,
        "x^{p-1}a_{0,3}+(1+x^{p-1})a_{1,2}+a_{1,3}+x^{p-1}a_{2,3}+(1+x^{p-1})a_{3,1}+a_{3,3}",
    ),
    (
        5,
        0,
        "a_{0,0}+a_{1,0}+a_{0,1}+x^2a_{2,0}+(x^{2}a_{3,0}+x^{2}a_{2,2})",
    ),
    (
        5,
        1,
        "x^{p-1}a_{0,1}+(1+x^{p-1})a_{1,0}+xa_{1,1}+x^2a_{2,1}+x^{2}a_{3,1}+x^{2}a_{2,3}",
    ),
    (
        5,
        2,
        "a_{0,2}+(a_{1,2}+a_{0,3})+xa_{2,2}+(x+x^{2})a_{3,0}+x^3a_{3,2}",
    ),
    (
        5,
        3,
        "x^{p-1}a_{0,3}+(1+x^{p-1})a_{1,2}+xa_{1,3}+xa_{2,3}+(x+x^{2})a_{3,1}+x^3a_{3,3}",
    ),
];

pub fn two_layer_systematic_table() -> Result<(), String> {
    for p in PRIMES {
        let cells = systematic_cells(p, 2);
        check(&cells, &FIRST2, p)?;
        check_identity(&cells, 0..4, 4, p)?;
    }
    Ok(())
}

pub fn three_layer_systematic_table() -> Result<(), String> {
    let expected: [(usize, usize, &str); 16] = [
        (4, 0, "a_{0,0}+(x^{p-1}a_{1,0}+x^{p-1}a_{0,1})+a_{2,0}+(x^{p-1}a_{3,0}+x^{p-1}a_{2,2})"),
        (4, 1, "x^{p-1}a_{0,1}+(1+x^{p-1})a_{1,0}+a_{1,1}+a_{2,1}+x^{p-1}a_{3,1}+x^{p-1}a_{2,3}"),
        (4, 2, "a_{0,2}+(x^{p-1}a_{1,2}+x^{p-1}a_{0,3})+x^{p-1}a_{2,2}+(1+x^{p-1})a_{3,0}+a_{3,2}"),
        (4, 3, "x^{p-1}a_{0,3}+(1+x^{p-1})a_{1,2}+a_{1,3}+x^{p-1}a_{2,3}+(1+x^{p-1})a_{3,1}+a_{3,3}"),
        (4, 4, "a_{0,4}+(x^{p-1}a_{1,4}+x^{p-1}a_{0,5})+a_{2,4}+(x^{p-1}a_{3,4}+x^{p-1}a_{2,6})+
                (1+x)(a_{0,0}+a_{1,0}+a_{0,1}+x^2a_{2,0}+(x^{2}a_{3,0}+x^{2}a_{2,2}))"),
        (4, 5, "x^{p-1}a_{0,5}+(1+x^{p-1})a_{1,4}+a_{1,5}+a_{2,5}+x^{p-1}a_{3,5}+x^{p-1}a_{2,7}+
                (1+x)(x^{p-1}a_{0,1}+(1+x^{p-1})a_{1,0}+xa_{1,1}+x^2a_{2,1}+x^{2}a_{3,1}+x^{2}a_{2,3})"),
        (4, 6, "a_{0,6}+(x^{p-1}a_{1,6}+x^{p-1}a_{0,7})+x^{p-1}a_{2,6}+(1+x^{p-1})a_{3,4}+a_{3,6}+
                (1+x)(a_{0,2}+(a_{1,2}+a_{0,3})+xa_{2,2}+(x+x^{2})a_{3,0}+x^3a_{3,2})"),
        (4, 7, "x^{p-1}a_{0,7}+(1+x^{p-1})a_{1,6}+a_{1,7}+x^{p-1}a_{2,7}+(1+x^{p-1})a_{3,5}+a_{3,7}+
                (1+x)(x^{p-1}a_{0,3}+(1+x^{p-1})a_{1,2}+xa_{1,3}+xa_{2,3}+(x+x^{2})a_{3,1}+x^3a_{3,3})"),
        (5, 0, "a_{0,0}+a_{1,0}+a_{0,1}+x^2a_{2,0}+(x^{2}a_{3,0}+x^{2}a_{2,2})+
                a_{0,4}+(x^{p-1}a_{1,4}+x^{p-1}a_{0,5})+a_{2,4}+(x^{p-1}a_{3,4}+x^{p-1}a_{2,6})"),
        (5, 1, "x^{p-1}a_{0,1}+(1+x^{p-1})a_{1,0}+xa_{1,1}+x^2a_{2,1}+x^{2}a_{3,1}+x^{2}a_{2,3}+
                x^{p-1}a_{0,5}+(1+x^{p-1})a_{1,4}+a_{1,5}+a_{2,5}+x^{p-1}a_{3,5}+x^{p-1}a_{2,7}"),
        (5, 2, "a_{0,2}+(a_{1,2}+a_{0,3})+xa_{2,2}+(x+x^{2})a_{3,0}+x^3a_{3,2}+
                a_{0,6}+(x^{p-1}a_{1,6}+x^{p-1}a_{0,7})+x^{p-1}a_{2,6}+(1+x^{p-1})a_{3,4}+a_{3,6}"),
        (5, 3, "x^{p-1}a_{0,3}+(1+x^{p-1})a_{1,2}+xa_{1,3}+xa_{2,3}+(x+x^{2})a_{3,1}+x^3a_{3,3}+
                x^{p-1}a_{0,7}+(1+x^{p-1})a_{1,6}+a_{1,7}+x^{p-1}a_{2,7}+(1+x^{p-1})a_{3,5}+a_{3,7}"),
        (5, 4, "a_{0,4}+a_{1,4}+a_{0,5}+x^2a_{2,4}+(x^{2}a_{3,4}+x^{2}a_{2,6})"),
        (5, 5, "x^{p-1}a_{0,5}+(1+x^{p-1})a_{1,4}+xa_{1,5}+x^2a_{2,5}+x^{2}a_{3,5}+x^{2}a_{2,7}"),
        (5, 6, "a_{0,6}+(a_{1,6}+a_{0,7})+xa_{2,6}+(x+x^{2})a_{3,4}+x^3a_{3,6}"),
        (5, 7, "x^{p-1}a_{0,7}+(1+x^{p-1})a_{1,6}+xa_{1,7}+xa_{2,7}+(x+x^{2})a_{3,5}+x^3a_{3,7}"),
    ];
    for p in PRIMES {
        let cells = systematic_cells(p, 3);
        check(&cells, &expected, p)?;
        check_identity(&cells, 0..4, 8, p)?;
    }
    Ok(())
}
