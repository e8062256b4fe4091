#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const WALK_LOWER: &str = "\
pred X(x:int)
X(x) =mu if x > 0 then 2/3*X(x - 1) + 1/3*X(x + 1) + 1 else 0
query X(1) >= 3
";

pub const WALK_CERT: &str = "\
direction lower
u X = cases { x >= 1 => 6*x; x <= 0 => 0 }
r X = cases { x >= 1 => 9*x*(x + 3); x <= 0 => 0 }
eta X = cases { x >= 1 => 3*x; x <= 0 => 0 }
";

pub const MOMENT_LOWER: &str = "\
pred X1(x:int)
pred X2(x:int)
X1(x) =mu if x > 0 then 2/3*X1(x - 1) + 1/3*X1(x + 1) + 1 else 0
X2(x) =mu if x > 0 then 2/3*X2(x - 1) + 1/3*X2(x + 1) + 2*(2/3*X1(x - 1) + 1/3*X1(x + 1)) + 1 else 0
query X2(1) >= 33
";

pub const MOMENT_CERT: &str = "\
direction lower
u X1 = cases { x >= 1 => 6*x; x <= 0 => 0 }
r X1 = cases { x >= 1 => 9*x*(x + 3); x <= 0 => 0 }
eta X1 = cases { x >= 1 => 3*x; x <= 0 => 0 }
u X2 = cases { x >= 1 => 18*x^2 + 45*x; x <= 0 => 0 }
r X2 = cases { x >= 1 => 36*x^3 + 585/2*x^2 + 1683/2*x; x <= 0 => 0 }
eta X2 = cases { x >= 1 => 9*x^2 + 24*x; x <= 0 => 0 }
";

pub const WALK_PROGRAM: &str = "while(x>0){ tick; {x:=x-1}[2/3]{x:=x+1} }";

pub const TAILS: &str = "\
int m; bool b1, b2, b3;
m := 0; b1, b2, b3 := true;
while (b1 || b2 || b3) {
  {b1 := true} [1/2] {b1 := false};
  {b2 := true} [1/2] {b2 := false};
  {b3 := true} [1/2] {b3 := false};
  observe(!b1 || !b2 || !b3);
  m := m + 1
}
";

/// Loop predicate of the translated tails program.
pub const TAILS_PRED: &str = "while@3:1";

const SOME_B: [&str; 3] = ["b1 >= 1", "b2 >= 1 && b1 <= 0", "b3 >= 1 && b1 <= 0 && b2 <= 0"];
const NO_B: &str = "b1 <= 0 && b2 <= 0 && b3 <= 0";

/// Lower certificate for cwp1 with post `[m = n]`.
pub fn tails_cert1(n: i64) -> String {
    let mut cases: Vec<String> = Vec::new();
    for g in SOME_B {
        cases.push(format!("{g} && m <= {} => 1/6*pow(3/4, {n} - m)", n - 1));
        cases.push(format!("{g} && m >= {n} => 0"));
    }
    cases.push(format!("{NO_B} && m >= {n} && m <= {n} => 1"));
    cases.push(format!("{NO_B} && m <= {} => 0", n - 1));
    cases.push(format!("{NO_B} && m >= {} => 0", n + 1));
    format!(
        "direction lower\nu {TAILS_PRED} = 1\nr {TAILS_PRED} = 8\neta {TAILS_PRED} = cases {{ {} }}\n",
        cases.join("; ")
    )
}

fn half_if_some_b() -> String {
    let mut cases: Vec<String> = SOME_B.iter().map(|g| format!("{g} => 1/2")).collect();
    cases.push(format!("{NO_B} => 0"));
    format!("cases {{ {} }}", cases.join("; "))
}

pub fn tails_cert2() -> String {
    format!("direction lower\nu {TAILS_PRED} = 1\nr {TAILS_PRED} = 8\neta {TAILS_PRED} = {}\n", half_if_some_b())
}

pub fn tails_upper2() -> String {
    format!("direction upper\nu {TAILS_PRED} = {}\n", half_if_some_b())
}

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(format!("{name}.eq"))).unwrap()
}

pub fn ufp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ufp")).args(args).output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}
