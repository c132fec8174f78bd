//! Name-keyed registry of causality estimators and the per-system parameter
//! presets they are built from.

use serde::{Deserialize, Serialize};

use crate::crossmap::{ccm, si_pair, CcmParams, SiParams};
use crate::error::{Error, Result};
use crate::info::{ctir, ete_hist, te_hist, te_ksg, CtirParams, EteParams, HistParams, KsgParams};
use crate::regress::{egc, nlgc, pi, EgcParams, NlgcParams, PiParams};
use crate::rng::derive_seed;
use crate::series::{embed, EmbeddingSpec, IndexEstimate, SeriesPair};
use crate::simulate::SystemKind;

/// Bumped whenever a preset value changes; recorded in run manifests.
pub const PRESET_VERSION: &str = "1";

/// A causality estimator selectable by name.
pub trait CausalityIndex: Send + Sync {
    /// Registry key, e.g. `"te_ksg"`.
    fn name(&self) -> &'static str;

    /// Names of the estimates produced, in order.
    fn outputs(&self) -> &'static [&'static str];

    /// Both directions of every output. `seed` drives all internal
    /// randomness.
    fn estimate(&self, pair: &SeriesPair, seed: u64) -> Result<Vec<IndexEstimate>>;
}

/// Registry keys in canonical order.
pub const ESTIMATORS: [&str; 9] = [
    "egc", "nlgc", "pi", "te_h", "ete_h", "te_ksg", "ctir", "si", "ccm",
];

/// Output names in canonical order.
pub const OUTPUTS: [&str; 10] = [
    "EGC", "NLGC", "PI", "TE_H", "ETE_H", "TE_KSG", "CTIR", "SI1", "SI2", "CCM",
];

/// Maps an estimator or output name, in any case, to its registry key.
pub fn resolve(name: &str) -> Option<&'static str> {
    let n = name.trim().to_ascii_lowercase().replace('-', "_");
    match n.as_str() {
        "si1" | "si2" => Some("si"),
        _ => ESTIMATORS.into_iter().find(|e| *e == n),
    }
}

fn with_embedding(pair: &SeriesPair, m: usize) -> Result<crate::series::DelayMatrix> {
    embed(pair, EmbeddingSpec::dim(m))
}

/// Runs `f` on the embedded pair; numerical failures in embedding become a
/// degenerate estimate for each output.
fn on_embedding(
    pair: &SeriesPair,
    m: usize,
    outputs: &[&str],
    f: impl FnOnce(&crate::series::DelayMatrix) -> Result<Vec<IndexEstimate>>,
) -> Result<Vec<IndexEstimate>> {
    match with_embedding(pair, m) {
        Ok(dm) => f(&dm),
        Err(e) if e.is_numerical() => Ok(outputs
            .iter()
            .map(|o| IndexEstimate::degenerate(*o))
            .collect()),
        Err(e) => Err(e),
    }
}

pub struct Egc {
    pub m: usize,
    pub params: EgcParams,
}

impl CausalityIndex for Egc {
    fn name(&self) -> &'static str {
        "egc"
    }
    fn outputs(&self) -> &'static [&'static str] {
        &["EGC"]
    }
    fn estimate(&self, pair: &SeriesPair, seed: u64) -> Result<Vec<IndexEstimate>> {
        let p = EgcParams {
            seed,
            ..self.params
        };
        on_embedding(pair, self.m, self.outputs(), |dm| Ok(vec![egc(dm, &p)?]))
    }
}

pub struct Nlgc {
    pub m: usize,
    pub params: NlgcParams,
}

impl CausalityIndex for Nlgc {
    fn name(&self) -> &'static str {
        "nlgc"
    }
    fn outputs(&self) -> &'static [&'static str] {
        &["NLGC"]
    }
    fn estimate(&self, pair: &SeriesPair, seed: u64) -> Result<Vec<IndexEstimate>> {
        let p = NlgcParams {
            seed,
            ..self.params
        };
        on_embedding(pair, self.m, self.outputs(), |dm| Ok(vec![nlgc(dm, &p)?]))
    }
}

pub struct Pi {
    pub m: usize,
    pub params: PiParams,
}

impl CausalityIndex for Pi {
    fn name(&self) -> &'static str {
        "pi"
    }
    fn outputs(&self) -> &'static [&'static str] {
        &["PI"]
    }
    fn estimate(&self, pair: &SeriesPair, _seed: u64) -> Result<Vec<IndexEstimate>> {
        on_embedding(pair, self.m, self.outputs(), |dm| {
            Ok(vec![pi(dm, &self.params)?])
        })
    }
}

pub struct TeHist {
    pub m: usize,
    pub params: HistParams,
}

impl CausalityIndex for TeHist {
    fn name(&self) -> &'static str {
        "te_h"
    }
    fn outputs(&self) -> &'static [&'static str] {
        &["TE_H"]
    }
    fn estimate(&self, pair: &SeriesPair, _seed: u64) -> Result<Vec<IndexEstimate>> {
        on_embedding(pair, self.m, self.outputs(), |dm| {
            Ok(vec![te_hist(dm, &self.params)?])
        })
    }
}

pub struct EteHist {
    pub m: usize,
    pub params: HistParams,
    pub shuffles: usize,
}

impl CausalityIndex for EteHist {
    fn name(&self) -> &'static str {
        "ete_h"
    }
    fn outputs(&self) -> &'static [&'static str] {
        &["ETE_H"]
    }
    fn estimate(&self, pair: &SeriesPair, seed: u64) -> Result<Vec<IndexEstimate>> {
        let e = EteParams {
            shuffles: self.shuffles,
            seed,
        };
        match ete_hist(pair, EmbeddingSpec::dim(self.m), &self.params, &e) {
            Err(err) if err.is_numerical() => Ok(vec![IndexEstimate::degenerate("ETE_H")]),
            other => Ok(vec![other?]),
        }
    }
}

pub struct TeKsg {
    pub m: usize,
    pub params: KsgParams,
}

impl CausalityIndex for TeKsg {
    fn name(&self) -> &'static str {
        "te_ksg"
    }
    fn outputs(&self) -> &'static [&'static str] {
        &["TE_KSG"]
    }
    fn estimate(&self, pair: &SeriesPair, seed: u64) -> Result<Vec<IndexEstimate>> {
        let p = KsgParams {
            seed,
            ..self.params
        };
        on_embedding(pair, self.m, self.outputs(), |dm| Ok(vec![te_ksg(dm, &p)?]))
    }
}

pub struct Ctir {
    pub params: CtirParams,
}

impl CausalityIndex for Ctir {
    fn name(&self) -> &'static str {
        "ctir"
    }
    fn outputs(&self) -> &'static [&'static str] {
        &["CTIR"]
    }
    fn estimate(&self, pair: &SeriesPair, seed: u64) -> Result<Vec<IndexEstimate>> {
        let p = CtirParams {
            ksg: KsgParams {
                seed,
                ..self.params.ksg
            },
            ..self.params
        };
        Ok(vec![ctir(pair, &p)?])
    }
}

pub struct Si {
    pub m: usize,
    pub si1: SiParams,
    pub si2: SiParams,
}

impl CausalityIndex for Si {
    fn name(&self) -> &'static str {
        "si"
    }
    fn outputs(&self) -> &'static [&'static str] {
        &["SI1", "SI2"]
    }
    fn estimate(&self, pair: &SeriesPair, _seed: u64) -> Result<Vec<IndexEstimate>> {
        on_embedding(pair, self.m, self.outputs(), |dm| {
            let (a, b) = si_pair(dm, &self.si1, &self.si2)?;
            Ok(vec![a, b])
        })
    }
}

pub struct Ccm {
    pub m: usize,
    pub params: CcmParams,
}

impl CausalityIndex for Ccm {
    fn name(&self) -> &'static str {
        "ccm"
    }
    fn outputs(&self) -> &'static [&'static str] {
        &["CCM"]
    }
    fn estimate(&self, pair: &SeriesPair, seed: u64) -> Result<Vec<IndexEstimate>> {
        let p = CcmParams {
            seed,
            ..self.params
        };
        on_embedding(pair, self.m, self.outputs(), |dm| Ok(vec![ccm(dm, &p)?]))
    }
}

/// Every estimator parameter for one (system, series length) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub system: SystemKind,
    pub len: usize,
    /// Embedding dimension for EGC, NLGC, SI and CCM.
    pub m: usize,
    pub egc_neighbourhoods: usize,
    pub egc_delta: f64,
    pub nlgc_centers: usize,
    pub nlgc_sigma2: f64,
    pub pi_m: usize,
    pub pi_neighbours: usize,
    pub si1_neighbours: usize,
    pub si2_neighbours: usize,
    pub ctir_tau_max: usize,
    /// Embedding dimension for TE (H), ETE (H) and TE (KSG).
    pub te_m: usize,
    pub bins: usize,
    pub shuffles: usize,
    pub ksg_k: usize,
    pub ccm_segments: usize,
    pub ccm_delta_rho: f64,
}

impl Preset {
    fn base(name: &str, system: SystemKind, len: usize, m: usize) -> Self {
        Preset {
            name: name.to_string(),
            system,
            len,
            m,
            egc_neighbourhoods: 100,
            egc_delta: 0.5,
            nlgc_centers: 50,
            nlgc_sigma2: 0.05,
            pi_m: m,
            pi_neighbours: 1,
            si1_neighbours: 20,
            si2_neighbours: 20,
            ctir_tau_max: 5,
            te_m: 1,
            bins: 8,
            shuffles: 10,
            ksg_k: 4,
            ccm_segments: 40,
            ccm_delta_rho: 0.05,
        }
    }

    pub fn all() -> Vec<Preset> {
        use SystemKind::*;
        let lp = Preset {
            egc_neighbourhoods: 20,
            egc_delta: 0.8,
            nlgc_centers: 10,
            pi_m: 1,
            pi_neighbours: 10,
            si1_neighbours: 10,
            si2_neighbours: 30,
            ctir_tau_max: 20,
            ..Self::base("lp-1e4", LinearProcess, 10_000, 2)
        };
        let ulam = |name: &str, len, delta| Preset {
            egc_delta: delta,
            ..Self::base(name, Ulam, len, 1)
        };
        let hu = |name: &str, len, delta, centers| Preset {
            egc_delta: delta,
            nlgc_centers: centers,
            ..Self::base(name, HenonUni, len, 2)
        };
        let hb = |name: &str, system| Preset {
            egc_delta: 0.6,
            nlgc_centers: 10,
            si2_neighbours: 100,
            ..Self::base(name, system, 10_000, 2)
        };
        vec![
            lp,
            ulam("ulam-1e3", 1_000, 0.5),
            ulam("ulam-1e5", 100_000, 0.2),
            hu("henon-uni-1e3", 1_000, 0.5, 50),
            hu("henon-uni-1e4", 10_000, 0.3, 50),
            hu("henon-uni-1e5", 100_000, 0.2, 100),
            hb("henon-bi-i-1e4", HenonBiIdentical),
            hb("henon-bi-ni-1e4", HenonBiNonIdentical),
        ]
    }

    pub fn lookup(name: &str) -> Result<Preset> {
        Self::all()
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown preset '{name}'")))
    }

    /// The smallest-T preset of a system.
    pub fn default_for(system: SystemKind) -> Preset {
        Self::all()
            .into_iter()
            .find(|p| p.system == system)
            .expect("every system has a preset")
    }

    pub fn build(&self, estimator: &str) -> Result<Box<dyn CausalityIndex>> {
        let key = resolve(estimator)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown index '{estimator}'")))?;
        let ksg = KsgParams {
            k: self.ksg_k,
            ..Default::default()
        };
        let hist = HistParams { bins: self.bins };
        Ok(match key {
            "egc" => Box::new(Egc {
                m: self.m,
                params: EgcParams::new(self.egc_neighbourhoods, self.egc_delta),
            }),
            "nlgc" => Box::new(Nlgc {
                m: self.m,
                params: NlgcParams {
                    sigma2: self.nlgc_sigma2,
                    ..NlgcParams::new(self.nlgc_centers)
                },
            }),
            "pi" => Box::new(Pi {
                m: self.pi_m,
                params: PiParams::new(self.pi_neighbours),
            }),
            "te_h" => Box::new(TeHist {
                m: self.te_m,
                params: hist,
            }),
            "ete_h" => Box::new(EteHist {
                m: self.te_m,
                params: hist,
                shuffles: self.shuffles,
            }),
            "te_ksg" => Box::new(TeKsg {
                m: self.te_m,
                params: ksg,
            }),
            "ctir" => Box::new(Ctir {
                params: CtirParams {
                    tau_max: self.ctir_tau_max,
                    ksg,
                },
            }),
            "si" => Box::new(Si {
                m: self.m,
                si1: SiParams::new(self.si1_neighbours),
                si2: SiParams::new(self.si2_neighbours),
            }),
            "ccm" => Box::new(Ccm {
                m: self.m,
                params: CcmParams {
                    segments: self.ccm_segments,
                    delta_rho: self.ccm_delta_rho,
                    ..Default::default()
                },
            }),
            _ => unreachable!("resolve only yields registry keys"),
        })
    }
}

/// An ordered set of estimators built from one preset.
pub struct Registry {
    entries: Vec<Box<dyn CausalityIndex>>,
}

impl Registry {
    /// Builds the named estimators; an empty list selects all of them.
    pub fn from_preset(preset: &Preset, names: &[String]) -> Result<Self> {
        let mut keys: Vec<&'static str> = Vec::new();
        if names.is_empty() {
            keys.extend(ESTIMATORS);
        }
        for n in names {
            let k = resolve(n)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown index '{n}'")))?;
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        keys.sort_by_key(|k| ESTIMATORS.iter().position(|e| e == k));
        Ok(Registry {
            entries: keys
                .into_iter()
                .map(|k| preset.build(k))
                .collect::<Result<_>>()?,
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn outputs(&self) -> Vec<&'static str> {
        self.entries
            .iter()
            .flat_map(|e| e.outputs().iter().copied())
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&dyn CausalityIndex> {
        let key = resolve(name)?;
        self.entries
            .iter()
            .find(|e| e.name() == key)
            .map(|e| e.as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn CausalityIndex> {
        self.entries.iter().map(|e| e.as_ref())
    }

    /// Every estimate for `pair`, each estimator seeded from `seed` and its name.
    pub fn estimate_all(&self, pair: &SeriesPair, seed: u64) -> Result<Vec<IndexEstimate>> {
        let mut out = Vec::new();
        for e in self.iter() {
            out.extend(e.estimate(pair, derive_seed(seed, e.name()))?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Status;
    use crate::simulate::{sim_ulam, UlamParams};

    #[test]
    fn resolve_accepts_output_names() {
        assert_eq!(resolve("SI2"), Some("si"));
        assert_eq!(resolve("TE-KSG"), Some("te_ksg"));
        assert_eq!(resolve("ETE_H"), Some("ete_h"));
        assert_eq!(resolve("granger"), None);
    }

    #[test]
    fn presets_follow_the_parameter_table() {
        let lp = Preset::lookup("lp-1e4").unwrap();
        assert_eq!(
            (lp.m, lp.egc_neighbourhoods, lp.egc_delta, lp.nlgc_centers),
            (2, 20, 0.8, 10)
        );
        assert_eq!(
            (
                lp.pi_m,
                lp.pi_neighbours,
                lp.si1_neighbours,
                lp.si2_neighbours,
                lp.ctir_tau_max
            ),
            (1, 10, 10, 30, 20)
        );
        let ul = Preset::lookup("ulam-1e5").unwrap();
        assert_eq!(
            (ul.m, ul.egc_delta, ul.nlgc_centers, ul.ctir_tau_max),
            (1, 0.2, 50, 5)
        );
        let hu = Preset::lookup("henon-uni-1e5").unwrap();
        assert_eq!((hu.egc_delta, hu.nlgc_centers), (0.2, 100));
        let hb = Preset::lookup("henon-bi-ni-1e4").unwrap();
        assert_eq!(
            (hb.egc_delta, hb.nlgc_centers, hb.si2_neighbours),
            (0.6, 10, 100)
        );
        for p in Preset::all() {
            assert_eq!(
                (p.te_m, p.bins, p.shuffles, p.ksg_k, p.ccm_segments),
                (1, 8, 10, 4, 40)
            );
        }
        assert!(Preset::lookup("lp-1e9").is_err());
    }

    #[test]
    fn registry_builds_all_outputs() {
        let preset = Preset::lookup("ulam-1e3").unwrap();
        let reg = Registry::from_preset(&preset, &[]).unwrap();
        assert_eq!(reg.names(), ESTIMATORS.to_vec());
        assert_eq!(reg.outputs(), OUTPUTS.to_vec());
        let pair = sim_ulam(&UlamParams {
            lambda: 0.4,
            len: 1_000,
            seed: 1,
            ..Default::default()
        })
        .unwrap();
        let est = reg.estimate_all(&pair, 3).unwrap();
        let names: Vec<&str> = est.iter().map(|e| e.index.as_str()).collect();
        assert_eq!(names, OUTPUTS.to_vec());
        assert!(est.iter().all(|e| e.status == Status::Ok), "{est:?}");
    }

    #[test]
    fn registry_selection_and_determinism() {
        let preset = Preset::lookup("ulam-1e3").unwrap();
        let reg =
            Registry::from_preset(&preset, &["CCM".into(), "te_h".into(), "ccm".into()]).unwrap();
        assert_eq!(reg.names(), vec!["te_h", "ccm"]);
        assert!(reg.get("TE_H").is_some() && reg.get("egc").is_none());
        let pair = sim_ulam(&UlamParams {
            lambda: 0.5,
            len: 500,
            seed: 2,
            ..Default::default()
        })
        .unwrap();
        let a = reg.estimate_all(&pair, 5).unwrap();
        let b = reg.estimate_all(&pair, 5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.value_xy, x.value_yx), (y.value_xy, y.value_yx));
        }
        assert!(Registry::from_preset(&preset, &["nope".into()]).is_err());
    }

    #[test]
    fn too_short_series_are_degenerate_not_errors() {
        let preset = Preset::lookup("ulam-1e3").unwrap();
        let reg = Registry::from_preset(&preset, &[]).unwrap();
        let pair = SeriesPair::new(vec![0.1, 0.5], vec![0.3, 0.2]).unwrap();
        let est = reg.estimate_all(&pair, 0).unwrap();
        assert_eq!(est.len(), OUTPUTS.len());
        assert!(est.iter().all(|e| e.status == Status::Degenerate));
    }
}
