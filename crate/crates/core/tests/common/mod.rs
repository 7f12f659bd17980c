#![allow(dead_code)]

pub type Oracle = fn(f64, f64, f64) -> f64;

pub fn vars() -> Vec<String> {
    ["x1", "x2", "x3"].iter().map(|s| s.to_string()).collect()
}

/// Points where every corpus expression is defined.
pub const POINTS: [[f64; 3]; 4] = [[0.3, 1.7, 0.9], [1.25, 0.4, 2.5], [2.0, 3.0, 0.125], [0.77, 1.1, 1.9]];

/// Expressions paired with an independent direct evaluation.
pub fn corpus() -> Vec<(&'static str, Oracle)> {
    vec![
        ("1", |_, _, _| 1.0),
        ("x1", |a, _, _| a),
        ("-x1", |a, _, _| -a),
        ("x1 + x2 - x3", |a, b, c| a + b - c),
        ("x1 - x2 - x3", |a, b, c| (a - b) - c),
        ("x1 - (x2 - x3)", |a, b, c| a - (b - c)),
        ("x1*x2/x3", |a, b, c| (a * b) / c),
        ("x1/x2/x3", |a, b, c| (a / b) / c),
        ("x1/(x2*x3)", |a, b, c| a / (b * c)),
        ("x1^2", |a, _, _| a * a),
        ("-x1^2", |a, _, _| -(a * a)),
        ("(-x1)^2", |a, _, _| (-a) * (-a)),
        ("x1^3^0.5", |a, _, _| a.powf(3f64.powf(0.5))),
        ("2^-1", |_, _, _| 0.5),
        ("x2^0.5", |_, b, _| b.powf(0.5)),
        ("x1^-2", |a, _, _| 1.0 / (a * a)),
        ("1 + x2^2/2", |_, b, _| 1.0 + (b * b) / 2.0),
        ("1 + x1 + x2^2/2", |a, b, _| (1.0 + a) + (b * b) / 2.0),
        ("exp(-(x1^2 + x2^2))", |a, b, _| (-(a * a + b * b)).exp()),
        ("exp(2*x1*x2)", |a, b, _| (2.0 * a * b).exp()),
        ("log(x1*x2)", |a, b, _| (a * b).ln()),
        ("sqrt(x3)", |_, _, c| c.sqrt()),
        ("sin(x1) * cos(x2)", |a, b, _| a.sin() * b.cos()),
        ("sinh(x1)/cosh(x1)", |a, _, _| a.sinh() / a.cosh()),
        ("abs(x1 - x2)", |a, b, _| (a - b).abs()),
        ("abs(-x3)", |_, _, c| (-c).abs()),
        ("exp(log(x1))", |a, _, _| a.ln().exp()),
        ("sqrt(x1^2 + x2^2 + x3^2)", |a, b, c| (a * a + b * b + c * c).sqrt()),
        ("cosh(x1)*exp(-x1^2)", |a, _, _| a.cosh() * (-(a * a)).exp()),
        ("(x1 + x2)*(x1 - x2)", |a, b, _| (a + b) * (a - b)),
        ("2.5e-1*x1 + 1E1", |a, _, _| 0.25 * a + 10.0),
        ("--x1", |a, _, _| -(-a)),
        ("x1 - -x2", |a, b, _| a - (-b)),
        ("-(x1 + x2)*x3", |a, b, c| -(a + b) * c),
        ("exp(-x1)^2", |a, _, _| (-a).exp() * (-a).exp()),
        ("log(1 + x1^2)/sqrt(x2)", |a, b, _| (1.0 + a * a).ln() / b.sqrt()),
        ("sin(cos(sinh(x1)))", |a, _, _| a.sinh().cos().sin()),
        ("x1^x2", |a, b, _| a.powf(b)),
        ("(x1*x2)^(1/3)", |a, b, _| (a * b).powf(1.0 / 3.0)),
        ("  x1\n  + x2\t* 2 ", |a, b, _| a + b * 2.0),
    ]
}

/// Malformed sources with the expected (line, column) of the diagnostic.
pub fn error_cases() -> Vec<(&'static str, (usize, usize))> {
    vec![
        ("x1 + * x2", (1, 6)),
        ("x1 +", (1, 5)),
        ("", (1, 1)),
        ("(x1 + 1", (1, 8)),
        ("x1 + 1)", (1, 7)),
        ("x1 +\n  x2 $", (2, 6)),
        ("x1 + y7", (1, 6)),
        ("tan(x1)", (1, 1)),
        ("2*exp(x1, x2)", (1, 3)),
        ("log()", (1, 1)),
        ("1.2.3", (1, 1)),
        ("x1 x2", (1, 4)),
    ]
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}
