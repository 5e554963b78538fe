//! Configuration loading, run manifests, result files, parameter conversion
//! and the command-line surface.
//!
//! A results directory holds `config.json` (the canonical config),
//! `manifest.json`, `aggregate.json`, per-replica CSV shards under
//! `shards/`, plot-ready `fig_*.tsv` files and command-specific extras
//! (field snapshots, geodesics, ball masks). Every text file starts with a
//! `# config_hash=<hex>` line, and `aggregate.json` carries the same hash, so
//! files from different runs cannot be mixed silently; see [`verify_results`].

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{
    ball_topology, estimate_q, estimate_q_multi, estimate_scaling_constants, holder_check,
    kpz_run, replica_seed, set_distance_tightness, square_crossing, thick_dimension_run, xi_crit_bracket,
    ExperimentConfig,
};
use crate::field::{sample_gff, write_snapshot, FieldSpectrum};
use crate::fit;
use crate::grid::Geometry;
use crate::metric::{build_weights, distance, distance_across, distance_around, AnnulusSpec, RegionMask};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn backticked(msg: &str, after: &str) -> Option<String> {
    let i = msg.find(after)? + after.len();
    let rest = &msg[i..];
    let a = rest.find('`')? + 1;
    let b = rest[a..].find('`')? + a;
    Some(rest[a..b].to_string())
}

/// Parses and validates a TOML config. Unknown and missing keys are
/// reported as validation errors naming the key.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        if let Some(k) = backticked(&msg, "unknown field") {
            Error::validation(k, "unknown key")
        } else if let Some(k) = backticked(&msg, "missing field") {
            Error::validation(k, "required key is missing")
        } else {
            Error::Parse(e.to_string())
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Compact JSON with object keys in sorted order.
pub fn canonical_json(cfg: &ExperimentConfig) -> Result<String> {
    // serde_json maps are ordered by key, so a Value round trip sorts them
    let v = serde_json::to_value(cfg).map_err(|e| Error::Config(e.to_string()))?;
    Ok(v.to_string())
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of [`canonical_json`].
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    Ok(sha256_hex(canonical_json(cfg)?.as_bytes()))
}

/// What ran, when, and which files it wrote. The timestamps are the only
/// run-dependent bytes in a results directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub started: String,
    pub finished: String,
    pub command: String,
    pub outputs: Vec<String>,
}

/// Matter central charge, background charge and coupling constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamTriple {
    pub c: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    /// Real only for `c ≤ 1` (equivalently `Q ≥ 2`).
    pub gamma: Option<f64>,
    pub xi: Option<f64>,
    pub convention: String,
}

pub const CONVENTION: &str =
    "convention: c = 25 - 6 Q^2, Q = 2/gamma + gamma/2 (gamma in (0, 2] for c <= 1); xi is an independent input";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParamInput {
    C(f64),
    Q(f64),
    Gamma(f64),
}

/// Completes a `(c, Q, γ)` triple from any one of them using the usual LQG
/// relations. These are conventions supplied here, labelled as such.
pub fn convert_params(input: ParamInput, xi: Option<f64>) -> Result<ParamTriple> {
    let q = match input {
        ParamInput::C(c) => {
            if !(c < 25.0) {
                return Err(Error::Domain(format!("central charge must be below 25, got {c}")));
            }
            ((25.0 - c) / 6.0).sqrt()
        }
        ParamInput::Q(q) => {
            if !(q > 0.0 && q.is_finite()) {
                return Err(Error::Domain(format!("Q must be positive, got {q}")));
            }
            q
        }
        ParamInput::Gamma(g) => {
            if !(g > 0.0 && g <= 2.0) {
                return Err(Error::Domain(format!("gamma must lie in (0, 2], got {g}")));
            }
            2.0 / g + g / 2.0
        }
    };
    let c = match input {
        ParamInput::C(c) => c,
        _ => 25.0 - 6.0 * q * q,
    };
    let gamma = match input {
        ParamInput::Gamma(g) => Some(g),
        _ if q >= 2.0 => Some(q - (q * q - 4.0).max(0.0).sqrt()),
        _ => None,
    };
    Ok(ParamTriple {
        c,
        q,
        gamma,
        xi,
        convention: CONVENTION.to_string(),
    })
}

/// A per-replica CSV stream.
#[derive(Clone, Debug, PartialEq)]
pub struct Shard {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Shard {
    fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Shard {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Plot-ready `(x, y, yerr)` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Figure {
    pub name: String,
    pub rows: Vec<[f64; 3]>,
}

/// Everything a command writes besides the config and the manifest.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub aggregate: Value,
    pub shards: Vec<Shard>,
    pub figures: Vec<Figure>,
    /// Text files that get the hash line prepended.
    pub texts: Vec<(String, String)>,
    /// Binary files written as is.
    pub binaries: Vec<(String, Vec<u8>)>,
}

fn hash_line(hash: &str) -> String {
    format!("# config_hash={hash}\n")
}

fn f(x: f64) -> String {
    format!("{x}")
}

fn write_file(dir: &Path, rel: &str, bytes: &[u8], outputs: &mut Vec<String>) -> Result<()> {
    let path = dir.join(rel);
    if let Some(p) = path.parent() {
        fs::create_dir_all(p)?;
    }
    fs::write(&path, bytes)?;
    outputs.push(rel.to_string());
    Ok(())
}

/// Writes a results directory and returns the manifest (also written).
pub fn write_results(
    dir: &Path,
    cfg: &ExperimentConfig,
    command: &str,
    artifacts: &Artifacts,
    started: String,
) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    let canon = canonical_json(cfg)?;
    let hash = sha256_hex(canon.as_bytes());
    let mut outputs = Vec::new();
    write_file(dir, "config.json", format!("{canon}\n").as_bytes(), &mut outputs)?;
    let agg = json!({
        "config_hash": hash,
        "command": command,
        "tool_version": TOOL_VERSION,
        "result": artifacts.aggregate,
    });
    let agg_text = serde_json::to_string_pretty(&agg).map_err(|e| Error::Config(e.to_string()))? + "\n";
    write_file(dir, "aggregate.json", agg_text.as_bytes(), &mut outputs)?;
    for s in &artifacts.shards {
        let mut text = hash_line(&hash);
        text += &s.header.join(",");
        text.push('\n');
        for r in &s.rows {
            text += &r.join(",");
            text.push('\n');
        }
        write_file(dir, &format!("shards/{}.csv", s.name), text.as_bytes(), &mut outputs)?;
    }
    for fig in &artifacts.figures {
        let mut text = hash_line(&hash);
        text += "x\ty\tyerr\n";
        for r in &fig.rows {
            text += &format!("{}\t{}\t{}\n", r[0], r[1], r[2]);
        }
        write_file(dir, &format!("fig_{}.tsv", fig.name), text.as_bytes(), &mut outputs)?;
    }
    for (name, body) in &artifacts.texts {
        write_file(dir, name, (hash_line(&hash) + body).as_bytes(), &mut outputs)?;
    }
    for (name, bytes) in &artifacts.binaries {
        write_file(dir, name, bytes, &mut outputs)?;
    }
    let manifest = RunManifest {
        config_hash: hash,
        tool_version: TOOL_VERSION.to_string(),
        started,
        finished: now(),
        command: command.to_string(),
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))? + "\n";
    fs::write(dir.join("manifest.json"), text)?;
    Ok(manifest)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// A CSV shard as read back: the hash from its first line, header and rows.
pub fn read_shard(path: &Path) -> Result<(String, Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let hash = lines
        .next()
        .and_then(|l| l.strip_prefix("# config_hash="))
        .ok_or_else(|| Error::Corrupt(format!("{} has no config hash line", path.display())))?
        .to_string();
    let header = lines
        .next()
        .ok_or_else(|| Error::Corrupt(format!("{} has no header", path.display())))?
        .split(',')
        .map(String::from)
        .collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    Ok((hash, header, rows))
}

fn text_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d)? {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else if matches!(p.extension().and_then(|s| s.to_str()), Some("csv" | "tsv" | "rle")) {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Checks that every hashed file in a results directory carries the hash of
/// its `config.json`. Returns the hash.
pub fn verify_results(dir: &Path) -> Result<String> {
    let canon = fs::read_to_string(dir.join("config.json"))?;
    let hash = sha256_hex(canon.trim_end().as_bytes());
    let agg: Value = serde_json::from_str(&fs::read_to_string(dir.join("aggregate.json"))?)
        .map_err(|e| Error::Corrupt(format!("aggregate.json: {e}")))?;
    if agg["config_hash"].as_str() != Some(hash.as_str()) {
        return Err(Error::Corrupt("aggregate.json belongs to a different config".into()));
    }
    for p in text_files(dir)? {
        let text = fs::read_to_string(&p)?;
        let h = text.lines().next().and_then(|l| l.strip_prefix("# config_hash="));
        if h != Some(hash.as_str()) {
            return Err(Error::Corrupt(format!("{} belongs to a different config", p.display())));
        }
    }
    Ok(hash)
}

/// Run-length encoding of a mask: a geometry line, then the lengths of
/// alternating runs starting with unset vertices (row-major order).
pub fn mask_to_rle(mask: &RegionMask) -> String {
    let g = mask.geometry();
    let mut runs = Vec::new();
    let mut cur = false;
    let mut len = 0usize;
    for &b in mask.bits() {
        if b == cur {
            len += 1;
        } else {
            runs.push(len.to_string());
            cur = b;
            len = 1;
        }
    }
    runs.push(len.to_string());
    format!(
        "mask n={} spacing={} origin={},{}\n{}\n",
        g.n,
        g.spacing,
        g.origin[0],
        g.origin[1],
        runs.join(" ")
    )
}

/// Inverse of [`mask_to_rle`]; a leading hash line is skipped.
pub fn mask_from_rle(text: &str) -> Result<RegionMask> {
    let bad = |m: &str| Error::Corrupt(format!("mask file: {m}"));
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let head = lines.next().ok_or_else(|| bad("empty"))?;
    let mut n = None;
    let mut spacing = None;
    let mut origin = None;
    for tok in head.split_whitespace().skip(1) {
        let (k, v) = tok.split_once('=').ok_or_else(|| bad("malformed header"))?;
        match k {
            "n" => n = v.parse::<usize>().ok(),
            "spacing" => spacing = v.parse::<f64>().ok(),
            "origin" => {
                let (a, b) = v.split_once(',').ok_or_else(|| bad("malformed origin"))?;
                origin = a.parse::<f64>().ok().zip(b.parse::<f64>().ok()).map(|(a, b)| [a, b]);
            }
            _ => return Err(bad("unknown header key")),
        }
    }
    let (Some(n), Some(spacing), Some(origin)) = (n, spacing, origin) else {
        return Err(bad("incomplete header"));
    };
    let g = Geometry::new(n, spacing, origin)?;
    let mut bits = Vec::with_capacity(g.len());
    let mut cur = false;
    for tok in lines.next().ok_or_else(|| bad("missing runs"))?.split_whitespace() {
        let len: usize = tok.parse().map_err(|_| bad("bad run length"))?;
        bits.extend(std::iter::repeat(cur).take(len));
        cur = !cur;
    }
    if bits.len() != g.len() {
        return Err(bad("run lengths do not cover the lattice"));
    }
    RegionMask::from_bits(g, bits)
}

/// Experiment commands that read a config and write a results directory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Sample,
    Distance,
    Exponent,
    Scaling,
    Kpz,
    Thick,
    BallTopology,
    Tightness,
    Holder,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Distance => "distance",
            Command::Exponent => "exponent",
            Command::Scaling => "scaling",
            Command::Kpz => "kpz",
            Command::Thick => "thick",
            Command::BallTopology => "ball-topology",
            Command::Tightness => "tightness",
            Command::Holder => "holder",
        }
    }

    pub fn parse(name: &str) -> Result<Command> {
        use Command::*;
        [Sample, Distance, Exponent, Scaling, Kpz, Thick, BallTopology, Tightness, Holder]
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::Usage(format!("unknown command `{name}`")))
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Config(e.to_string()))
}

fn replica_name(i: usize) -> String {
    format!("replica_{i:04}")
}

fn xi_list(list: &[f64], xi: f64) -> Vec<f64> {
    if list.is_empty() {
        vec![xi]
    } else {
        list.to_vec()
    }
}

/// Runs one experiment command and returns what it would write.
pub fn compute(command: Command, cfg: &ExperimentConfig) -> Result<Artifacts> {
    cfg.validate()?;
    let mut art = Artifacts::default();
    match command {
        Command::Sample => {
            let mut shard = Shard::new("replicas", &["replica", "seed", "n", "mean", "min", "max"]);
            for i in 0..cfg.replicas {
                let seed = replica_seed(cfg.master_seed, i);
                let h = sample_gff(cfg.n, cfg.side, seed)?;
                let v = h.values();
                let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
                shard.push(vec![i.to_string(), seed.to_string(), cfg.n.to_string(), f(h.mean()), f(lo), f(hi)]);
                let mut bytes = Vec::new();
                write_snapshot(&h, &mut bytes)?;
                art.binaries.push((format!("fields/field_{i:04}.lfpp"), bytes));
            }
            art.shards.push(shard);
            art.aggregate = json!({ "n": cfg.n, "L": cfg.side, "replicas": cfg.replicas, "seeds": cfg.seeds() });
        }
        Command::Distance => {
            let eps = cfg.eps0();
            let d = &cfg.distance;
            let ann_in = AnnulusSpec::round([0.0, 0.0], d.inner, d.outer)?;
            let mut rows = Vec::new();
            for i in 0..cfg.replicas {
                let h = sample_gff(cfg.n, cfg.side, replica_seed(cfg.master_seed, i))?;
                let m = FieldSpectrum::new(&h).mollify(eps)?;
                let w = build_weights(&m, cfg.xi)?.with_eps(eps).with_stencil(cfg.stencil);
                let full = RegionMask::full(*w.geometry());
                let crossing = square_crossing(&w, [0.0, 0.0], 1.0)?;
                let across = distance_across(&w, &ann_in, &full)?.distance;
                let around = distance_around(&w, &ann_in, &full)?.distance;
                if i == 0 {
                    let g = *w.geometry();
                    let (a, b) = (g.nearest_vertex([-0.5, 0.0]), g.nearest_vertex([0.5, 0.0]));
                    if let (Some(a), Some(b)) = (a, b) {
                        let r = distance(&w, &[a], &[b], &full, true)?;
                        let mut text = String::from("row,col,x,y\n");
                        for v in r.geodesic.unwrap_or_default() {
                            let p = g.position(v);
                            text += &format!("{},{},{},{}\n", v.0, v.1, p[0], p[1]);
                        }
                        art.texts.push(("geodesic_0000.csv".into(), text));
                    }
                }
                let mut s = Shard::new(replica_name(i), &["crossing", "across", "around"]);
                s.push(vec![f(crossing), f(across), f(around)]);
                art.shards.push(s);
                rows.push([crossing, across, around]);
            }
            let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
            art.aggregate = json!({
                "eps": eps,
                "median_crossing": fit::median(&col(0)),
                "median_across": fit::median(&col(1)),
                "median_around": fit::median(&col(2)),
                "annulus": [d.inner, d.outer],
            });
        }
        Command::Exponent => {
            let xis = xi_list(&cfg.exponent.xi_list, cfg.xi);
            let qs = estimate_q_multi(cfg, &xis)?;
            for i in 0..cfg.replicas {
                let mut s = Shard::new(replica_name(i), &["xi", "eps", "n", "crossing"]);
                for q in &qs {
                    for (j, e) in q.eps_list.iter().enumerate() {
                        s.push(vec![f(q.xi), f(*e), q.n_list[j].to_string(), f(q.crossings[j][i])]);
                    }
                }
                art.shards.push(s);
            }
            for q in &qs {
                art.figures.push(Figure {
                    name: format!("a_eps_xi{}", q.xi),
                    rows: q
                        .eps_list
                        .iter()
                        .zip(&q.crossings)
                        .zip(&q.medians)
                        .map(|((e, c), m)| [*e, *m, fit::median_se(c)])
                        .collect(),
                });
            }
            art.figures.push(Figure {
                name: "q_of_xi".into(),
                rows: qs.iter().map(|q| [q.xi, q.q_hat, q.q_stderr]).collect(),
            });
            art.aggregate = json!({ "estimates": to_value(&qs)?, "xi_crit_bracket": xi_crit_bracket(&qs) });
        }
        Command::Scaling => {
            let sc = estimate_scaling_constants(cfg, &cfg.scaling.r_list)?;
            let q = estimate_q(cfg)?;
            for (i, reps) in sc.samples.iter().enumerate() {
                let mut s = Shard::new(replica_name(i), &["r", "crossing", "h_r"]);
                for x in reps {
                    s.push(vec![f(x.r), f(x.crossing), f(x.h_r)]);
                }
                art.shards.push(s);
            }
            art.figures.push(Figure {
                name: "c_r".into(),
                rows: sc.r_list.iter().zip(&sc.c_r).map(|(r, c)| [*r, *c, 0.0]).collect(),
            });
            let xq = cfg.xi * q.q_hat;
            let se = fit::pooled_se(sc.fit.stderr_slope, cfg.xi * q.q_stderr);
            art.aggregate = json!({
                "scaling": to_value(&sc)?,
                "q": to_value(&q)?,
                "xi_q_hat": xq,
                "slope_minus_xi_q": sc.fit.slope - xq,
                "pooled_se": se,
                "within_two_se": (sc.fit.slope - xq).abs() <= 2.0 * se,
            });
        }
        Command::Kpz => {
            let rep = kpz_run(cfg)?;
            for (i, e) in rep.estimates.iter().enumerate() {
                let mut s = Shard::new(replica_name(i), &["s_star", "infinite", "level", "log2_sum"]);
                for (x, y) in e.fit.x_values.iter().zip(&e.fit.y_values) {
                    s.push(vec![f(e.value), e.infinite.to_string(), f(*x), f(*y)]);
                }
                art.shards.push(s);
            }
            art.aggregate = to_value(&rep)?;
        }
        Command::Thick => {
            let rep = thick_dimension_run(cfg)?;
            for (i, e) in rep.estimates.iter().enumerate() {
                let mut s = Shard::new(replica_name(i), &["level", "log2_count", "dimension"]);
                if let Some(e) = e {
                    for (x, y) in e.fit.x_values.iter().zip(&e.fit.y_values) {
                        s.push(vec![f(*x), f(*y), f(e.value)]);
                    }
                }
                art.shards.push(s);
            }
            art.aggregate = to_value(&rep)?;
        }
        Command::BallTopology => {
            let xis = xi_list(&cfg.ball.xi_list, cfg.xi);
            let t = ball_topology(cfg, cfg.ball.quantile, &xis)?;
            for i in 0..cfg.replicas {
                let mut s = Shard::new(replica_name(i), &["xi", "n", "radius", "components"]);
                for r in &t.rows {
                    s.push(vec![f(r.xi), r.n.to_string(), f(r.radii[i]), r.components[i].to_string()]);
                }
                art.shards.push(s);
            }
            for xi in &xis {
                art.figures.push(Figure {
                    name: format!("components_xi{xi}"),
                    rows: t
                        .rows
                        .iter()
                        .filter(|r| r.xi == *xi)
                        .map(|r| {
                            let c: Vec<f64> = r.components.iter().map(|&c| c as f64).collect();
                            [r.n as f64, r.median_components, fit::median_se(&c)]
                        })
                        .collect(),
                });
            }
            for (r, b) in t.rows.iter().zip(&t.first_balls) {
                art.texts.push((format!("ball_xi{}_n{}.rle", r.xi, r.n), mask_to_rle(b)));
            }
            art.aggregate = to_value(&t)?;
        }
        Command::Tightness => {
            let p = &cfg.tightness;
            let t = set_distance_tightness(cfg, &p.k1, &p.k2, &p.a_list)?;
            for i in 0..cfg.replicas {
                let mut s = Shard::new(replica_name(i), &["distance", "h_r", "ratio"]);
                s.push(vec![f(t.distances[i]), f(t.h_r[i]), f(t.ratios[i])]);
                art.shards.push(s);
            }
            art.figures.push(Figure {
                name: "probability_of_a".into(),
                rows: t.a_list.iter().zip(&t.probability).map(|(a, p)| [*a, *p, 0.0]).collect(),
            });
            art.aggregate = to_value(&t)?;
        }
        Command::Holder => {
            let (q_hat, q_value) = match cfg.holder.q_hat {
                Some(q) => (q, Value::Null),
                None => {
                    let q = estimate_q(cfg)?;
                    (q.q_hat, to_value(&q)?)
                }
            };
            let rep = holder_check(cfg, q_hat, cfg.holder.chi_margin)?;
            let mut shards: Vec<Shard> = (0..cfg.replicas)
                .map(|i| Shard::new(replica_name(i), &["separation", "distance", "exponent"]))
                .collect();
            for p in &rep.pairs {
                let e = (p.distance / rep.a_eps).ln() / p.separation.ln();
                shards[p.replica].push(vec![f(p.separation), f(p.distance), f(e)]);
            }
            art.shards = shards;
            let mut agg = to_value(&rep)?;
            if let Value::Object(m) = &mut agg {
                m.remove("pairs");
                m.insert("pair_count".into(), json!(rep.pairs.len()));
                m.insert("q_estimate".into(), q_value);
            }
            art.aggregate = agg;
        }
    }
    Ok(art)
}

/// Runs a command and writes its results directory.
pub fn run(command: Command, cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    let started = now();
    let art = compute(command, cfg)?;
    write_results(out, cfg, command.name(), &art, started)
}

/// Machine-readable error record.
pub fn error_record(e: &Error) -> Value {
    let mut v = json!({ "error": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() });
    if let Error::Validation { key, .. } = e {
        v["key"] = json!(key);
    }
    v
}

/// Sets the global worker count: the flag, else `LFPP_THREADS`, else all
/// cores. `0` means all cores.
pub fn configure_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("LFPP_THREADS") {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| Error::validation("LFPP_THREADS", format!("not a thread count: {s}")))?,
            Err(_) => 0,
        },
    };
    if n > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

#[derive(Debug, Parser)]
#[command(name = "lfpp", version, about = "Liouville first passage percolation experiments")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Results directory.
    #[arg(long)]
    out: PathBuf,
    /// Override `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); falls back to LFPP_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    /// Override `replicas`.
    #[arg(long)]
    replicas: Option<usize>,
}

#[derive(Debug, Args)]
#[group(skip)]
#[command(group = clap::ArgGroup::new("input").required(true).multiple(false))]
struct ConvertArgs {
    /// Matter central charge.
    #[arg(long, group = "input", allow_hyphen_values = true)]
    c: Option<f64>,
    /// Background charge.
    #[arg(long = "q", group = "input")]
    q: Option<f64>,
    /// Coupling constant.
    #[arg(long, group = "input")]
    gamma: Option<f64>,
    /// LFPP parameter, passed through.
    #[arg(long)]
    xi: Option<f64>,
    /// Also write the triple to DIR/params.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Sample GFF replicas and save field snapshots.
    Sample(RunArgs),
    /// Unit-square crossing and annulus distances per replica.
    Distance(RunArgs),
    /// Estimate Q(xi) from crossing medians under joint refinement.
    Exponent(RunArgs),
    /// Scaling constants c_r against xi Q.
    Scaling(RunArgs),
    /// Quantum dimension of a test set against the KPZ prediction.
    Kpz(RunArgs),
    /// Box dimension of thick points.
    Thick(RunArgs),
    /// Complement components of metric balls over grid refinements.
    BallTopology(RunArgs),
    /// Set-to-set distance tightness table.
    Tightness(RunArgs),
    /// Empirical Hölder exponent check.
    Holder(RunArgs),
    /// Complete a (c, Q, gamma) triple.
    ConvertParams(ConvertArgs),
}

fn run_cli(cmd: CliCommand) -> std::result::Result<(), (Error, Option<PathBuf>)> {
    let (command, args) = match cmd {
        CliCommand::ConvertParams(a) => {
            let input = match (a.c, a.q, a.gamma) {
                (Some(c), _, _) => ParamInput::C(c),
                (_, Some(q), _) => ParamInput::Q(q),
                (_, _, Some(g)) => ParamInput::Gamma(g),
                _ => unreachable!("clap requires one input"),
            };
            let out = a.out.clone();
            let wrap = |e: Error| (e, out.clone());
            let t = convert_params(input, a.xi).map_err(wrap)?;
            let text = serde_json::to_string_pretty(&t).map_err(|e| wrap(Error::Config(e.to_string())))?;
            println!("{text}");
            if let Some(dir) = &a.out {
                fs::create_dir_all(dir).map_err(|e| wrap(e.into()))?;
                fs::write(dir.join("params.json"), text + "\n").map_err(|e| wrap(e.into()))?;
            }
            return Ok(());
        }
        CliCommand::Sample(a) => (Command::Sample, a),
        CliCommand::Distance(a) => (Command::Distance, a),
        CliCommand::Exponent(a) => (Command::Exponent, a),
        CliCommand::Scaling(a) => (Command::Scaling, a),
        CliCommand::Kpz(a) => (Command::Kpz, a),
        CliCommand::Thick(a) => (Command::Thick, a),
        CliCommand::BallTopology(a) => (Command::BallTopology, a),
        CliCommand::Tightness(a) => (Command::Tightness, a),
        CliCommand::Holder(a) => (Command::Holder, a),
    };
    let out = Some(args.out.clone());
    let wrap = |e: Error| (e, out.clone());
    configure_threads(args.threads).map_err(wrap)?;
    let mut cfg = load_config(&args.config).map_err(wrap)?;
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(r) = args.replicas {
        cfg.replicas = r;
    }
    cfg.validate().map_err(wrap)?;
    let m = run(command, &cfg, &args.out).map_err(wrap)?;
    eprintln!("{}: wrote {} files to {}", m.command, m.outputs.len() + 1, args.out.display());
    Ok(())
}

/// Entry point of the `lfpp` binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run_cli(cli.command) {
        Ok(()) => 0,
        Err((e, out)) => {
            let rec = error_record(&e);
            eprintln!("{rec}");
            if let Some(dir) = out {
                if fs::create_dir_all(&dir).is_ok() {
                    let _ = fs::write(dir.join("error.json"), format!("{rec}\n"));
                }
            }
            e.exit_code()
        }
    }
}
