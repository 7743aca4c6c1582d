//! Seeded synthetic corpora with class structure, skewed technology sizes,
//! time-ordered citations and a small technical vocabulary.

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{
    CitationRecord, ClassList, ClassLists, ClassMembership, ClassSystem, CorpusError, CorpusStore,
    KindPrefix, PatentRecord,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub patents: usize,
    pub start_year: i32,
    pub end_year: i32,
    pub upc_classes: usize,
    pub ipc_classes: usize,
    /// Latent technologies; each has a home UPC and home IPC class.
    pub technologies: usize,
    /// Zipf exponent of technology sizes.
    pub class_skew: f64,
    /// Mean citations made per patent.
    pub citation_rate: f64,
    /// Probability that a citation targets the citing patent's main class.
    pub within_class_share: f64,
    /// Mean number of additional UPC / IPC memberships per patent.
    pub extra_upc: f64,
    pub extra_ipc: f64,
    /// Probability that a primary classification is drawn at random.
    pub misclassification: f64,
    /// Share of patents carrying a non-utility kind prefix.
    pub special_share: f64,
    /// Words per abstract (0 gives title-only patents).
    pub abstract_words: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            patents: 5_000,
            start_year: 1980,
            end_year: 2000,
            upc_classes: 20,
            ipc_classes: 25,
            technologies: 40,
            class_skew: 1.0,
            citation_rate: 10.0,
            within_class_share: 0.5,
            extra_upc: 1.5,
            extra_ipc: 1.0,
            misclassification: 0.05,
            special_share: 0.0,
            abstract_words: 30,
        }
    }
}

const THEMES: &[[&str; 3]] = &[
    ["internal", "combustion", "engine"],
    ["solar", "cell", "module"],
    ["semiconductor", "device", "fabrication"],
    ["packet", "network", "routing"],
    ["optical", "fiber", "transmission"],
    ["battery", "electrode", "electrolyte"],
    ["image", "display", "panel"],
    ["pharmaceutical", "drug", "composition"],
    ["enzyme", "nucleic", "amplification"],
    ["electrical", "connector", "terminal"],
    ["memory", "cache", "controller"],
    ["printing", "ink", "nozzle"],
    ["magnetic", "recording", "disk"],
    ["surgical", "catheter", "stent"],
    ["polymer", "resin", "coating"],
    ["wireless", "mobile", "handover"],
    ["database", "query", "record"],
    ["encryption", "key", "authentication"],
    ["lighting", "lamp", "reflector"],
    ["motor", "rotor", "stator"],
    ["vehicle", "hitch", "towing"],
    ["candle", "wax", "wick"],
    ["handle", "grip", "tool"],
    ["lubricant", "oil", "additive"],
    ["drilling", "well", "borehole"],
    ["filtration", "membrane", "separation"],
    ["laser", "beam", "scanning"],
    ["probe", "cantilever", "microscope"],
    ["projector", "lens", "screen"],
    ["switchgear", "busbar", "substation"],
    ["camera", "video", "compression"],
    ["speech", "audio", "signal"],
    ["circuit", "clock", "amplifier"],
    ["packaging", "container", "lid"],
    ["textile", "yarn", "weaving"],
    ["sewage", "drain", "pipe"],
    ["fastener", "nail", "staple"],
    ["hammock", "camping", "tent"],
    ["hanger", "garment", "clothes"],
    ["baton", "projectile", "weapon"],
];

const GENERIC: &[&str] = &[
    "method", "apparatus", "system", "device", "improved", "assembly", "process", "unit",
    "control", "structure", "arrangement", "portable", "efficient", "compact", "automatic",
    "housing", "member", "layer", "sensor", "operating",
];

struct Technology {
    home_upc: u32,
    home_ipc: u32,
    side_upc: u32,
    side_ipc: u32,
    attractiveness: f64,
    theme: usize,
}

pub(crate) fn upc_label(k: usize) -> String {
    format!("{}", 100 + k)
}

pub(crate) fn ipc_label(k: usize) -> String {
    let section = (b'A' + (k % 8) as u8) as char;
    let class = 1 + (k / 8) % 99;
    let sub = (b'A' + ((k / 792) % 26) as u8) as char;
    format!("{section}{class:02}{sub}")
}

impl SynthConfig {
    fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: &str| Err(CorpusError::InfeasibleConfig(m.to_string()));
        if self.patents == 0 {
            return bad("patent count must be positive");
        }
        if self.start_year > self.end_year {
            return bad("start_year after end_year");
        }
        if self.upc_classes == 0 || self.upc_classes > 899 {
            return bad("upc_classes must be in 1..=899");
        }
        if self.ipc_classes == 0 || self.ipc_classes > 8 * 99 * 26 {
            return bad("ipc_classes must be in 1..=20592");
        }
        if self.technologies == 0 {
            return bad("technologies must be positive");
        }
        if !(self.citation_rate.is_finite() && self.citation_rate >= 0.0) {
            return bad("citation_rate must be a non-negative number");
        }
        // On average a patent has (n - 1) / 2 earlier patents to cite.
        if self.citation_rate > (self.patents as f64 - 1.0) / 2.0 {
            return bad("citation_rate exceeds the number of available earlier patents");
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.within_class_share) || !unit(self.misclassification) {
            return bad("shares must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.special_share) {
            return bad("special_share must lie in [0, 1)");
        }
        if !(self.class_skew >= 0.0 && self.extra_upc >= 0.0 && self.extra_ipc >= 0.0) {
            return bad("skew and extra membership means must be non-negative");
        }
        Ok(())
    }
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map_or(0, |d| d.sample(rng) as usize)
}

fn weighted_index(rng: &mut ChaCha8Rng, cumulative: &[f64]) -> usize {
    let total = *cumulative.last().expect("non-empty weights");
    let x = rng.random::<f64>() * total;
    cumulative.partition_point(|&c| c <= x).min(cumulative.len() - 1)
}

/// Deterministic for a fixed `(config, seed)`.
pub fn generate_synthetic_corpus(config: &SynthConfig, seed: u64) -> Result<CorpusStore, CorpusError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_upc = config.upc_classes as u32;
    let n_ipc = config.ipc_classes as u32;

    let techs: Vec<Technology> = (0..config.technologies)
        .map(|t| Technology {
            home_upc: rng.random_range(0..n_upc),
            home_ipc: rng.random_range(0..n_ipc),
            side_upc: rng.random_range(0..n_upc),
            side_ipc: rng.random_range(0..n_ipc),
            attractiveness: rng.random_range(0.2..1.0),
            theme: t % THEMES.len(),
        })
        .collect();
    let max_attract = techs.iter().map(|t| t.attractiveness).fold(0.0, f64::max);
    let mut cumulative = Vec::with_capacity(techs.len());
    let mut acc = 0.0;
    for rank in 1..=techs.len() {
        acc += (rank as f64).powf(-config.class_skew);
        cumulative.push(acc);
    }

    // Grant dates with mildly growing yearly volume, then ids in date order.
    let years = (config.end_year - config.start_year + 1) as usize;
    let mut year_cum = Vec::with_capacity(years);
    let mut acc = 0.0;
    for y in 0..years {
        acc += 1.0 + 0.05 * y as f64;
        year_cum.push(acc);
    }
    let mut drafts: Vec<(NaiveDate, usize)> = (0..config.patents)
        .map(|_| {
            let year = config.start_year + weighted_index(&mut rng, &year_cum) as i32;
            let first = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
            let days = if NaiveDate::from_ymd_opt(year, 12, 31).expect("valid").ordinal() == 366 { 366 } else { 365 };
            let date = first + chrono::Duration::days(rng.random_range(0..days));
            (date, weighted_index(&mut rng, &cumulative))
        })
        .collect();
    drafts.sort_by_key(|&(d, _)| d);

    let mut patents = Vec::with_capacity(config.patents);
    let mut memberships = Vec::new();
    let mut tech_of = Vec::with_capacity(config.patents);
    let mut main_of = Vec::with_capacity(config.patents);
    for (i, &(date, t)) in drafts.iter().enumerate() {
        let tech = &techs[t];
        let kind = if rng.random::<f64>() < config.special_share {
            KindPrefix::SPECIAL[rng.random_range(0..KindPrefix::SPECIAL.len())]
        } else {
            KindPrefix::Utility
        };
        let pick = |rng: &mut ChaCha8Rng, home: u32, side: u32, n: u32, misclass: f64| {
            let r = rng.random::<f64>();
            if r < misclass {
                rng.random_range(0..n)
            } else if r < misclass + (1.0 - misclass) * 0.3 {
                side
            } else {
                home
            }
        };
        let main = if rng.random::<f64>() < config.misclassification {
            rng.random_range(0..n_upc)
        } else {
            tech.home_upc
        };
        let patent = i as u32;
        memberships.push(ClassMembership { patent, system: ClassSystem::Upc, class: main, is_primary: true });
        for _ in 0..poisson(&mut rng, config.extra_upc).min(4) {
            let class = pick(&mut rng, tech.home_upc, tech.side_upc, n_upc, 0.5);
            if class != main {
                memberships.push(ClassMembership { patent, system: ClassSystem::Upc, class, is_primary: false });
            }
        }
        let first_ipc = if rng.random::<f64>() < config.misclassification {
            rng.random_range(0..n_ipc)
        } else {
            tech.home_ipc
        };
        memberships.push(ClassMembership { patent, system: ClassSystem::Ipc, class: first_ipc, is_primary: false });
        for _ in 0..poisson(&mut rng, config.extra_ipc).min(4) {
            let class = pick(&mut rng, tech.home_ipc, tech.side_ipc, n_ipc, 0.5);
            memberships.push(ClassMembership { patent, system: ClassSystem::Ipc, class, is_primary: false });
        }

        let (title, abstract_text) = compose_text(&mut rng, tech.theme, config.abstract_words);
        patents.push(PatentRecord {
            id: format!("{}", 4_000_000 + i),
            grant_date: date,
            kind,
            main_class: Some(main),
            title,
            abstract_text,
        });
        tech_of.push(t);
        main_of.push(main);
    }

    // Citations point from each patent to patents earlier in (date, id) order.
    let mut by_class: Vec<Vec<u32>> = vec![Vec::new(); config.upc_classes];
    let mut citations = Vec::new();
    let mut chosen: Vec<u32> = Vec::new();
    for i in 0..config.patents {
        let want = poisson(&mut rng, config.citation_rate).min(i);
        chosen.clear();
        let mut attempts = 0;
        while chosen.len() < want && attempts < 50 * want.max(1) {
            attempts += 1;
            let within = rng.random::<f64>() < config.within_class_share;
            let j = if within {
                let pool = &by_class[main_of[i] as usize];
                if pool.is_empty() {
                    continue;
                }
                pool[rng.random_range(0..pool.len())]
            } else {
                let j = rng.random_range(0..i as u32);
                if main_of[j as usize] == main_of[i] {
                    continue;
                }
                j
            };
            if rng.random::<f64>() * max_attract > techs[tech_of[j as usize]].attractiveness {
                continue;
            }
            if !chosen.contains(&j) {
                chosen.push(j);
            }
        }
        citations.extend(chosen.iter().map(|&cited| CitationRecord { citing: i as u32, cited }));
        by_class[main_of[i] as usize].push(i as u32);
    }

    let class_lists = ClassLists {
        upc: ClassList::new((0..config.upc_classes).map(upc_label)),
        ipc: ClassList::new((0..config.ipc_classes).map(ipc_label)),
    };
    CorpusStore::assemble(patents, memberships, citations, class_lists)
}

fn compose_text(rng: &mut ChaCha8Rng, theme: usize, abstract_words: usize) -> (String, String) {
    let words = THEMES[theme];
    let generic = |rng: &mut ChaCha8Rng| GENERIC[rng.random_range(0..GENERIC.len())];
    let lead = generic(rng);
    let tail = generic(rng);
    let core = if rng.random::<bool>() { &words[..] } else { &words[1..] };
    let mut title = String::from(lead);
    for w in core {
        title.push(' ');
        title.push_str(w);
    }
    title.push(' ');
    title.push_str(tail);
    let mut title = capitalize(&title);
    if rng.random::<f64>() < 0.02 {
        title.clear();
    }

    let mut abstract_text = String::new();
    if rng.random::<f64>() >= 0.05 {
        for k in 0..abstract_words {
            let r = rng.random::<f64>();
            let w = if r < 0.55 {
                words[rng.random_range(0..3)]
            } else if r < 0.9 {
                generic(rng)
            } else {
                THEMES[rng.random_range(0..THEMES.len())][rng.random_range(0..3)]
            };
            if k > 0 {
                abstract_text.push(' ');
            }
            abstract_text.push_str(w);
        }
        if !abstract_text.is_empty() {
            abstract_text = capitalize(&abstract_text);
            abstract_text.push('.');
        }
    }
    (title, abstract_text)
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}
