//! Synthetic notebook corpus whose characteristics are known by
//! construction.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

const DATA: [&str; 10] = ["df", "raw", "X", "y", "feats", "labels", "scaled", "train", "test", "pred"];

/// Ground-truth counts for one generated notebook.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Truth {
    pub cells: usize,
    pub loc_per_cell: f64,
    pub branches_per_cell: f64,
    pub functions: usize,
    pub classes: usize,
    pub non_parsing_cells: usize,
    pub variables_per_cell: f64,
    pub unbound_per_cell: f64,
}

#[derive(Debug, Clone)]
pub struct CorpusNotebook {
    pub sources: Vec<String>,
    pub truth: Truth,
}

#[derive(Default)]
struct Track {
    text: String,
    defined: BTreeSet<String>,
    names: BTreeSet<String>,
    unbound: BTreeSet<String>,
    loc: usize,
    branches: usize,
    functions: usize,
    classes: usize,
}

impl Track {
    fn line(&mut self, s: String) {
        self.text.push_str(&s);
        self.text.push('\n');
        self.loc += 1;
    }

    fn read(&mut self, v: &str) {
        self.names.insert(v.to_string());
        if !self.defined.contains(v) {
            self.unbound.insert(v.to_string());
        }
    }

    fn write(&mut self, v: &str) {
        self.names.insert(v.to_string());
        self.defined.insert(v.to_string());
    }
}

fn pick<R: Rng>(rng: &mut R) -> &'static str {
    DATA.choose(rng).unwrap()
}

fn emit<R: Rng>(rng: &mut R, t: &mut Track, n: usize) {
    match rng.gen_range(0..20) {
        0..=2 => {
            let v = pick(rng);
            t.read("pd");
            t.write(v);
            t.line(format!("{v} = pd.read_csv('data_{n}.csv')"));
        }
        3..=5 => {
            let (v, a, b) = (pick(rng), pick(rng), pick(rng));
            t.read(a);
            t.read(b);
            t.write(v);
            t.line(format!("{v} = {a} * 2 + {b}"));
        }
        6 | 7 => {
            let (v, a) = (pick(rng), pick(rng));
            t.read("sk");
            t.read(a);
            t.write(v);
            t.line(format!("{v} = sk.fit_transform({a})"));
        }
        8 => {
            let (v, w, a) = (pick(rng), pick(rng), pick(rng));
            t.read("sk");
            t.read(a);
            t.write(v);
            t.write(w);
            t.line(format!("{v}, {w} = sk.split({a})"));
        }
        9 => {
            t.read("sk");
            t.write("model");
            t.line("model = sk.LogisticRegression()".into());
        }
        10 => {
            let (a, b) = (pick(rng), pick(rng));
            t.read("model");
            t.read(a);
            t.read(b);
            t.line(format!("model.fit({a}, {b})"));
        }
        11 => {
            let (v, a) = (pick(rng), pick(rng));
            t.read("model");
            t.read(a);
            t.write(v);
            t.line(format!("{v} = model.predict({a})"));
        }
        12 => {
            let a = pick(rng);
            t.read(a);
            t.line(format!("print({a}.shape)"));
        }
        13 => {
            t.text.push_str(&format!("# step {n}\n\n"));
        }
        14 | 15 => {
            let (c, v) = (pick(rng), pick(rng));
            t.read(c);
            t.line(format!("if {c} > 0:"));
            t.line(format!("    {v} = {c} - 1"));
            t.line("else:".into());
            t.line(format!("    {v} = 0"));
            t.write(v);
            t.branches += 1;
        }
        16 => {
            let v = pick(rng);
            let before = t.defined.clone();
            t.line("for i in range(3):".into());
            t.write("i");
            t.read(v);
            t.write(v);
            t.line(format!("    {v} = {v} + i"));
            t.defined = before;
            t.branches += 1;
        }
        17 | 18 => {
            let a = pick(rng);
            t.read(a);
            t.write(&format!("f{n}"));
            t.line(format!("def f{n}(p):"));
            t.line(format!("    return p * {a}"));
            t.functions += 1;
        }
        _ => {
            t.write(&format!("C{n}"));
            t.line(format!("class C{n}:"));
            t.line("    pass".into());
            t.classes += 1;
        }
    }
}

/// A notebook of `cells` cells averaging about nine lines of code each; the
/// first cell imports the modules the rest use. Roughly one cell in
/// twenty-five does not parse.
pub fn corpus_notebook<R: Rng>(rng: &mut R, cells: usize) -> CorpusNotebook {
    let mut sources = Vec::with_capacity(cells);
    let mut truth = Truth { cells, ..Truth::default() };
    let (mut loc, mut branches, mut vars, mut unbound, mut parsed) = (0, 0, 0, 0, 0);
    for i in 0..cells {
        let mut t = Track::default();
        if i == 0 {
            t.write("pd");
            t.write("sk");
            t.line("import pandas as pd".into());
            t.line("import sklearn as sk".into());
        }
        let target = rng.gen_range(5..=12);
        let mut n = 0;
        while t.loc < target {
            emit(rng, &mut t, i * 100 + n);
            n += 1;
        }
        let broken = i > 0 && rng.gen_ratio(1, 25);
        if broken {
            t.line(format!("{} = (", pick(rng)));
        }
        loc += t.loc;
        if broken {
            truth.non_parsing_cells += 1;
        } else {
            parsed += 1;
            branches += t.branches;
            truth.functions += t.functions;
            truth.classes += t.classes;
            vars += t.names.len();
            unbound += t.unbound.len();
        }
        sources.push(t.text);
    }
    let per = |x: usize, n: usize| if n == 0 { 0.0 } else { x as f64 / n as f64 };
    truth.loc_per_cell = per(loc, cells);
    truth.branches_per_cell = per(branches, parsed);
    truth.variables_per_cell = per(vars, parsed);
    truth.unbound_per_cell = per(unbound, parsed);
    CorpusNotebook { sources, truth }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn loc_averages_near_nine() {
        let mut rng = StdRng::seed_from_u64(3);
        let mean: f64 = (0..40).map(|_| corpus_notebook(&mut rng, 24).truth.loc_per_cell).sum::<f64>() / 40.0;
        assert!((8.0..=10.5).contains(&mean), "{mean}");
    }
}
