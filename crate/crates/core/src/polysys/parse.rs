//! Parser for the polynomial system text format:
//!
//! ```text
//! system := "vars" INT ";" poly (";" poly)*
//! poly   := term (("+"|"-") term)*
//! term   := [coeff "*"] factor ("*" factor)*  |  coeff
//! factor := "x" INT ["^" INT]
//! coeff  := INT | INT "/" INT
//! ```
//!
//! Whitespace is insignificant. A polynomial may open with a sign and the
//! system may end with a trailing `;`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Monomial, PolyError, PolySystem, Polynomial};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Vars,
    Var(usize),
    Int(BigInt),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    Semi,
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> PolyError {
    PolyError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>, PolyError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let digits_end = |start: usize| {
        let mut j = start;
        while j < chars.len() && chars[j].is_ascii_digit() {
            j += 1;
        }
        j
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let (tok, len) = match c {
            '+' => (Tok::Plus, 1),
            '-' => (Tok::Minus, 1),
            '*' => (Tok::Star, 1),
            '^' => (Tok::Caret, 1),
            '/' => (Tok::Slash, 1),
            ';' => (Tok::Semi, 1),
            'x' => {
                let end = digits_end(i + 1);
                if end == i + 1 {
                    return Err(syntax(line, col, "expected a variable index after 'x'"));
                }
                let s: String = chars[i + 1..end].iter().collect();
                let idx: usize = s
                    .parse()
                    .map_err(|_| syntax(line, col, "variable index too large"))?;
                if idx == 0 {
                    return Err(syntax(line, col, "variable indices start at 1"));
                }
                (Tok::Var(idx), end - i)
            }
            'v' => {
                let word: String = chars[i..(i + 4).min(chars.len())].iter().collect();
                if word != "vars" {
                    return Err(syntax(line, col, "unexpected identifier"));
                }
                (Tok::Vars, 4)
            }
            d if d.is_ascii_digit() => {
                let end = digits_end(i);
                let s: String = chars[i..end].iter().collect();
                (Tok::Int(s.parse().expect("digit run")), end - i)
            }
            other => return Err(syntax(line, col, format!("unexpected character {other:?}"))),
        };
        out.push(Spanned { tok, line, col });
        i += len;
        col += len;
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    nvars: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Spanned, PolyError> {
        let t = self.bump();
        if t.tok == want {
            Ok(t)
        } else {
            Err(syntax(t.line, t.col, format!("expected {what}")))
        }
    }

    fn int(&mut self, what: &str) -> Result<(BigInt, usize, usize), PolyError> {
        let t = self.bump();
        match t.tok {
            Tok::Int(n) => Ok((n, t.line, t.col)),
            _ => Err(syntax(t.line, t.col, format!("expected {what}"))),
        }
    }

    fn system(&mut self) -> Result<PolySystem, PolyError> {
        self.expect(Tok::Vars, "'vars'")?;
        let (n, line, col) = self.int("the number of variables")?;
        self.nvars = n
            .to_usize()
            .filter(|&n| n > 0)
            .ok_or_else(|| syntax(line, col, "the number of variables must be a positive integer"))?;
        self.expect(Tok::Semi, "';' after the variable count")?;
        let mut polys = Vec::new();
        loop {
            polys.push(self.poly()?);
            let t = self.bump();
            match t.tok {
                Tok::Semi if self.peek().tok == Tok::Eof => break,
                Tok::Semi => continue,
                Tok::Eof => break,
                _ => return Err(syntax(t.line, t.col, "expected '+', '-', ';' or end of input")),
            }
        }
        PolySystem::new(self.nvars, polys)
    }

    fn poly(&mut self) -> Result<Polynomial, PolyError> {
        let mut terms = Vec::new();
        let mut negate = match self.peek().tok {
            Tok::Minus => {
                self.bump();
                true
            }
            Tok::Plus => {
                self.bump();
                false
            }
            _ => false,
        };
        loop {
            let (m, c) = self.term()?;
            terms.push((m, if negate { -c } else { c }));
            match self.peek().tok {
                Tok::Plus => negate = false,
                Tok::Minus => negate = true,
                _ => break,
            }
            self.bump();
        }
        Ok(Polynomial::from_terms(self.nvars, terms))
    }

    fn term(&mut self) -> Result<(Monomial, BigRational), PolyError> {
        let mut mono = Monomial::one(self.nvars);
        let coeff = match self.peek().tok {
            Tok::Int(_) => {
                let c = self.coeff()?;
                if self.peek().tok != Tok::Star {
                    return Ok((mono, c));
                }
                self.bump();
                c
            }
            Tok::Var(_) => BigRational::one(),
            _ => {
                let t = self.peek();
                return Err(syntax(t.line, t.col, "expected a coefficient or a variable"));
            }
        };
        loop {
            let (v, e) = self.factor()?;
            mono = mono.mul(&Monomial::var(self.nvars, v, e));
            if self.peek().tok != Tok::Star {
                break;
            }
            self.bump();
        }
        Ok((mono, coeff))
    }

    fn coeff(&mut self) -> Result<BigRational, PolyError> {
        let (num, _, _) = self.int("a coefficient")?;
        if self.peek().tok != Tok::Slash {
            return Ok(BigRational::from_integer(num));
        }
        self.bump();
        let (den, line, col) = self.int("a denominator")?;
        if den.is_zero() || den.is_negative() {
            return Err(syntax(line, col, "denominator must be positive"));
        }
        Ok(BigRational::new(num, den))
    }

    fn factor(&mut self) -> Result<(usize, u32), PolyError> {
        let t = self.bump();
        let Tok::Var(idx) = t.tok else {
            return Err(syntax(t.line, t.col, "expected a variable"));
        };
        if idx > self.nvars {
            return Err(PolyError::VariableOutOfRange {
                var: idx,
                nvars: self.nvars,
                line: t.line,
                col: t.col,
            });
        }
        let mut exp = 1;
        if self.peek().tok == Tok::Caret {
            self.bump();
            let (e, line, col) = self.int("an exponent")?;
            exp = e
                .to_u32()
                .ok_or_else(|| syntax(line, col, "exponent out of range"))?;
        }
        Ok((idx - 1, exp))
    }
}

/// Parses one polynomial system into canonical form.
pub fn parse_system(text: &str) -> Result<PolySystem, PolyError> {
    let toks = lex(text)?;
    Parser {
        toks,
        pos: 0,
        nvars: 0,
    }
    .system()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_unordered_factor_system() {
        let s = parse_system(
            "vars 3; 68*x1^2 - 12*x3*x2 + 46*x3 - 126; -54*x2*x1 + 11*x1 + 92*x2 - 42*x3*x2*x1 - 35",
        )
        .unwrap();
        assert_eq!(s.nvars(), 3);
        assert_eq!(s.len(), 2);
        assert_eq!(s.polys()[0].to_string(), "68*x1^2 - 12*x2*x3 + 46*x3 - 126");
        assert_eq!(
            s.polys()[1].to_string(),
            "-42*x1*x2*x3 - 54*x1*x2 + 11*x1 + 92*x2 - 35"
        );
    }

    #[test]
    fn single_variable_system() {
        let s = parse_system("vars 3; x1").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.polys()[0], Polynomial::var(3, 0));
    }

    #[test]
    fn zero_polynomial_rejected() {
        assert_eq!(
            parse_system("vars 3; x1 - x1"),
            Err(PolyError::ZeroPolynomial { number: 1 })
        );
    }

    #[test]
    fn variable_beyond_nvars() {
        let err = parse_system("vars 2; x1 + x3").unwrap_err();
        assert_eq!(
            err,
            PolyError::VariableOutOfRange {
                var: 3,
                nvars: 2,
                line: 1,
                col: 14
            }
        );
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_system("vars 3;\n  x1 + * x2") {
            Err(PolyError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 8)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_system("vars 3; x0"), Err(PolyError::Syntax { .. })));
        assert!(matches!(parse_system("vars 0; x1"), Err(PolyError::Syntax { .. })));
        assert!(matches!(parse_system("vars 3;"), Err(PolyError::Syntax { .. })));
        assert!(matches!(parse_system("vars 3; 1/0*x1"), Err(PolyError::Syntax { .. })));
        assert!(matches!(parse_system("vars 3; x1 x2"), Err(PolyError::Syntax { .. })));
        assert!(matches!(parse_system("vars 3; 2*3"), Err(PolyError::Syntax { .. })));
    }

    #[test]
    fn rational_coefficients_and_repeated_factors() {
        let s = parse_system("vars 2; 3/6*x1*x1 + 2/1").unwrap();
        assert_eq!(s.polys()[0].to_string(), "1/2*x1^2 + 2");
    }

    #[test]
    fn trailing_semicolon_and_whitespace() {
        let a = parse_system("vars 3; x1 + 1;\n").unwrap();
        let b = parse_system("vars 3;x1+1").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn print_parse_fixpoint() {
        let s = parse_system("vars 3; -x3^2*x1 + 7/3*x2 - 1; x2*x3 + x1^4").unwrap();
        let printed = s.to_string();
        assert_eq!(parse_system(&printed).unwrap(), s);
        assert_eq!(parse_system(&printed).unwrap().to_string(), printed);
    }
}
