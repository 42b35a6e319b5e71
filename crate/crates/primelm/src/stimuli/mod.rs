//! Stimulus generation for the seven sentence types: frames plus a
//! felicity-constrained lexicon, disjoint adaptation/test content pools, and
//! the scrambling transform.

mod frames;
mod lexicon;

pub use frames::{
    builtin_frames, matches, realize, Fillers, Frame, NounRole, SentenceType, Slot, VerbRole,
    Voice, SENTENCE_TYPES,
};
pub use lexicon::{check_felicity, Lexicon, Pos, BUILTIN_LEXICON};

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::is_sentence_terminal;
use crate::error::{Error, Result};

/// One generated sentence with its type tag and metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stimulus {
    pub tokens: Vec<String>,
    pub sentence_type: SentenceType,
    /// Token index of the RC extraction site; -1 for coordination sentences
    /// and for scrambled stimuli.
    pub gap_index: i32,
    pub content_lemmas: BTreeSet<String>,
}

/// Adaptation and test sets for every sentence type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StimulusBundle {
    pub adaptation: [Vec<Stimulus>; 7],
    pub test: [Vec<Stimulus>; 7],
    pub seed: u64,
}

impl StimulusBundle {
    pub fn adaptation_for(&self, t: SentenceType) -> &[Stimulus] {
        &self.adaptation[t.index()]
    }

    pub fn test_for(&self, t: SentenceType) -> &[Stimulus] {
        &self.test[t.index()]
    }

    /// Content-lemma Jaccard overlap between a type's adaptation and test sets.
    pub fn overlap(&self, t: SentenceType) -> f64 {
        let collect = |set: &[Stimulus]| -> BTreeSet<String> {
            set.iter().flat_map(|s| s.content_lemmas.iter().cloned()).collect()
        };
        jaccard(&collect(self.adaptation_for(t)), &collect(self.test_for(t)))
    }
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone)]
pub struct GenOptions {
    pub n_adapt: usize,
    pub n_test: usize,
    pub seed: u64,
    /// Probability of filling each optional modifier slot.
    pub p_mod: f64,
    /// Maximum tolerated content-lemma Jaccard overlap between a type's
    /// adaptation and test sets.
    pub overlap_max: f64,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            n_adapt: 20,
            n_test: 50,
            seed: 0,
            p_mod: 0.5,
            overlap_max: 0.2,
        }
    }
}

/// Content-lemma pool: the slice of the lexicon one set may draw from.
#[derive(Debug, Clone, Default)]
struct Pool {
    nouns: BTreeSet<String>,
    verbs: BTreeSet<String>,
    modifiers: BTreeSet<String>,
}

/// Splits the lexicon's content lemmas into two disjoint pools so that the
/// adaptation and test sets of every type share no content lemma.
fn partition_pools(lexicon: &Lexicon, rng: &mut ChaCha8Rng) -> (Pool, Pool) {
    let mut pools = [Pool::default(), Pool::default()];

    let mut nouns: Vec<String> = lexicon.nouns().into_iter().collect();
    nouns.shuffle(rng);
    for (i, n) in nouns.into_iter().enumerate() {
        pools[i % 2].nouns.insert(n);
    }

    let usable = |pool: &Pool, verb: &str| -> bool {
        let has_agent = lexicon
            .agents(verb)
            .is_some_and(|s| s.iter().any(|n| pool.nouns.contains(n)));
        let has_patient = lexicon
            .patients(verb)
            .is_some_and(|s| s.iter().any(|n| pool.nouns.contains(n)));
        has_agent && has_patient
    };
    let mut verbs: Vec<String> = lexicon.verbs().cloned().collect();
    verbs.shuffle(rng);
    let mut flip = 0usize;
    for v in verbs {
        let fits = [usable(&pools[0], &v), usable(&pools[1], &v)];
        let target = match (fits[0], fits[1]) {
            (true, true) => {
                flip += 1;
                (flip - 1) % 2
            }
            (true, false) => 0,
            (false, true) => 1,
            (false, false) => continue, // not usable once nouns are halved
        };
        pools[target].verbs.insert(v);
    }

    let mut mods: Vec<String> = lexicon.modifier_lemmas().cloned().collect();
    mods.shuffle(rng);
    for (i, m) in mods.into_iter().enumerate() {
        pools[i % 2].modifiers.insert(m);
    }

    let [adapt, test] = pools;
    (adapt, test)
}

fn choose<'a>(items: &[&'a String], rng: &mut ChaCha8Rng) -> Option<&'a String> {
    if items.is_empty() {
        None
    } else {
        Some(items[rng.random_range(0..items.len())])
    }
}

/// Whether the frame's main-clause subject is the RC patient (N1) rather than
/// the RC agent (N2).
fn patient_initial(t: SentenceType) -> bool {
    !matches!(t, SentenceType::ActiveSubjRc | SentenceType::ActiveSubjMatchedCoord)
}

fn sample_stimulus(
    frame: &Frame,
    lexicon: &Lexicon,
    pool: &Pool,
    p_mod: f64,
    rng: &mut ChaCha8Rng,
) -> Option<Stimulus> {
    let in_pool = |s: &&String| pool.nouns.contains(*s);

    let rc_candidates: Vec<&String> = pool
        .verbs
        .iter()
        .filter(|v| {
            lexicon.agents(v).is_some_and(|a| a.iter().any(|n| pool.nouns.contains(n)))
                && lexicon.patients(v).is_some_and(|p| p.iter().any(|n| pool.nouns.contains(n)))
        })
        .collect();
    let rc_verb = choose(&rc_candidates, rng)?.clone();

    let agents: Vec<&String> = lexicon.agents(&rc_verb)?.iter().filter(in_pool).collect();
    let agent = choose(&agents, rng)?.clone();
    let patients: Vec<&String> = lexicon
        .patients(&rc_verb)?
        .iter()
        .filter(in_pool)
        .filter(|p| **p != agent)
        .collect();
    let patient = choose(&patients, rng)?.clone();

    let subject = if patient_initial(frame.sentence_type) { &patient } else { &agent };
    let main_candidates: Vec<&String> = pool
        .verbs
        .iter()
        .filter(|v| **v != rc_verb)
        .filter(|v| lexicon.licenses_agent(v, subject))
        .filter(|v| {
            lexicon.patients(v).is_some_and(|ps| {
                ps.iter().any(|n| pool.nouns.contains(n) && *n != agent && *n != patient)
            })
        })
        .collect();
    let main_verb = choose(&main_candidates, rng)?.clone();
    let main_patients: Vec<&String> = lexicon
        .patients(&main_verb)?
        .iter()
        .filter(in_pool)
        .filter(|n| **n != agent && **n != patient)
        .collect();
    let main_patient = choose(&main_patients, rng)?.clone();

    debug_assert!(check_felicity(&rc_verb, &agent, &patient, lexicon).unwrap_or(false));
    debug_assert!(
        lexicon.licenses_agent(&main_verb, subject)
            && lexicon.licenses_patient(&main_verb, &main_patient)
    );

    let mut modifiers: [Option<String>; 3] = [None, None, None];
    for (i, noun) in [&patient, &agent, &main_patient].into_iter().enumerate() {
        if rng.random_range(0.0..1.0) < p_mod {
            let compatible: Vec<&String> = pool
                .modifiers
                .iter()
                .filter(|m| lexicon.modifier_allows(m, noun))
                .collect();
            if let Some(m) = choose(&compatible, rng) {
                modifiers[i] = Some(m.clone());
            }
        }
    }

    let mut content: BTreeSet<String> = modifiers.iter().flatten().cloned().collect();
    content.extend([
        rc_verb.clone(),
        main_verb.clone(),
        agent.clone(),
        patient.clone(),
        main_patient.clone(),
    ]);

    let fillers = Fillers {
        rc_patient: patient,
        rc_agent: agent,
        main_patient,
        rc_verb_past: lexicon.past(&rc_verb)?.to_string(),
        main_verb_past: lexicon.past(&main_verb)?.to_string(),
        modifiers,
    };
    let (tokens, gap_index) = realize(frame, &fillers);
    Some(Stimulus {
        tokens,
        sentence_type: frame.sentence_type,
        gap_index,
        content_lemmas: content,
    })
}

fn deficient_class(pool: &Pool, lexicon: &Lexicon) -> &'static str {
    let agents = pool.nouns.iter().filter(|n| lexicon.is_agent_noun(n)).count();
    let patients = pool.nouns.iter().filter(|n| lexicon.is_patient_noun(n)).count();
    let verbs = pool.verbs.len();
    if verbs <= agents && verbs <= patients {
        "verb"
    } else if agents <= patients {
        "agent-noun"
    } else {
        "patient-noun"
    }
}

/// Generates the full stimulus bundle. Deterministic for a given seed; the
/// adaptation and test sets of each type draw from disjoint content pools.
pub fn generate(frames: &[Frame], lexicon: &Lexicon, opts: &GenOptions) -> Result<StimulusBundle> {
    for t in SENTENCE_TYPES {
        if !frames.iter().any(|f| f.sentence_type == t) {
            return Err(Error::Invalid(format!("no frame for sentence type {}", t.label())));
        }
    }
    let mut pool_rng = ChaCha8Rng::seed_from_u64(opts.seed);
    pool_rng.set_stream(u64::MAX);
    let (adapt_pool, test_pool) = partition_pools(lexicon, &mut pool_rng);

    let mut bundle = StimulusBundle {
        adaptation: Default::default(),
        test: Default::default(),
        seed: opts.seed,
    };

    for frame in frames {
        let ti = frame.sentence_type.index();
        for (set_idx, (pool, n)) in
            [(&adapt_pool, opts.n_adapt), (&test_pool, opts.n_test)].into_iter().enumerate()
        {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream((ti * 2 + set_idx) as u64);
            let mut seen: HashSet<Vec<String>> = HashSet::new();
            let mut out = Vec::with_capacity(n);
            let mut attempts = 0usize;
            let max_attempts = 200 * n + 200;
            while out.len() < n {
                attempts += 1;
                if attempts > max_attempts {
                    return Err(Error::LexiconTooSmall {
                        pos: deficient_class(pool, lexicon),
                        msg: format!(
                            "could not generate {n} distinct {} stimuli (got {})",
                            frame.sentence_type.label(),
                            out.len()
                        ),
                    });
                }
                if let Some(stim) = sample_stimulus(frame, lexicon, pool, opts.p_mod, &mut rng) {
                    if seen.insert(stim.tokens.clone()) {
                        out.push(stim);
                    }
                }
            }
            if set_idx == 0 {
                bundle.adaptation[ti] = out;
            } else {
                bundle.test[ti] = out;
            }
        }
    }

    for t in SENTENCE_TYPES {
        let overlap = bundle.overlap(t);
        if overlap > opts.overlap_max {
            return Err(Error::Invalid(format!(
                "adaptation/test content overlap {overlap:.3} exceeds {} for {}",
                opts.overlap_max,
                t.label()
            )));
        }
    }
    Ok(bundle)
}

/// Uniformly permutes the stimulus tokens, keeping a terminal punctuation
/// token in final position. The type label is preserved; the gap index is no
/// longer meaningful and is cleared.
pub fn scramble(stimulus: &Stimulus, rng: &mut ChaCha8Rng) -> Stimulus {
    let mut tokens = stimulus.tokens.clone();
    let n = tokens.len();
    let keep_last = tokens
        .last()
        .map(|t| t.chars().count() == 1 && t.chars().next().map(is_sentence_terminal).unwrap_or(false))
        .unwrap_or(false);
    let upper = if keep_last { n.saturating_sub(1) } else { n };
    tokens[..upper].shuffle(rng);
    Stimulus {
        tokens,
        sentence_type: stimulus.sentence_type,
        gap_index: -1,
        content_lemmas: stimulus.content_lemmas.clone(),
    }
}

// ---------------------------------------------------------------------------
// Stimulus file format: one sentence per line, plus a sidecar metadata file
// with `line<TAB>sentence_type<TAB>gap_index` (0-based line numbers).
// ---------------------------------------------------------------------------

pub fn stimuli_to_text(stimuli: &[Stimulus]) -> (String, String) {
    let mut sentences = String::new();
    let mut meta = String::new();
    for (i, s) in stimuli.iter().enumerate() {
        sentences.push_str(&s.tokens.join(" "));
        sentences.push('\n');
        meta.push_str(&format!("{i}\t{}\t{}\n", s.sentence_type.label(), s.gap_index));
    }
    (sentences, meta)
}

/// Parses a stimulus file plus sidecar. Content lemmas are recovered through
/// the lexicon when one is supplied.
pub fn stimuli_from_text(
    sentences: &str,
    meta: &str,
    lexicon: Option<&Lexicon>,
) -> Result<Vec<Stimulus>> {
    let what = "stimulus file";
    let lines: Vec<&str> = sentences.lines().collect();
    let mut out = Vec::new();
    for (i, mline) in meta.lines().enumerate() {
        if mline.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = mline.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::Parse {
                what,
                line: i + 1,
                msg: "sidecar needs line<TAB>sentence_type<TAB>gap_index".into(),
            });
        }
        let lineno: usize = cols[0].parse().map_err(|_| Error::Parse {
            what,
            line: i + 1,
            msg: format!("bad line number `{}`", cols[0]),
        })?;
        let sentence_type = SentenceType::from_label(cols[1]).ok_or_else(|| Error::Parse {
            what,
            line: i + 1,
            msg: format!("unknown sentence type `{}`", cols[1]),
        })?;
        let gap_index: i32 = cols[2].parse().map_err(|_| Error::Parse {
            what,
            line: i + 1,
            msg: format!("bad gap index `{}`", cols[2]),
        })?;
        let sentence = lines.get(lineno).ok_or_else(|| Error::Parse {
            what,
            line: i + 1,
            msg: format!("line {lineno} out of range"),
        })?;
        let tokens: Vec<String> = sentence.split_whitespace().map(str::to_string).collect();
        if tokens.is_empty() {
            return Err(Error::Parse {
                what,
                line: i + 1,
                msg: format!("line {lineno} is empty"),
            });
        }
        if gap_index >= tokens.len() as i32 {
            return Err(Error::Parse {
                what,
                line: i + 1,
                msg: format!("gap index {gap_index} out of range"),
            });
        }
        let content_lemmas = match lexicon {
            Some(lex) => tokens.iter().filter_map(|t| lex.lemma_of_surface(t)).collect(),
            None => BTreeSet::new(),
        };
        out.push(Stimulus {
            tokens,
            sentence_type,
            gap_index,
            content_lemmas,
        });
    }
    Ok(out)
}

pub fn write_bundle(dir: &Path, bundle: &StimulusBundle) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let flat = |sets: &[Vec<Stimulus>; 7]| -> Vec<Stimulus> {
        sets.iter().flat_map(|s| s.iter().cloned()).collect()
    };
    for (name, stimuli) in [("adapt", flat(&bundle.adaptation)), ("test", flat(&bundle.test))] {
        let (sentences, meta) = stimuli_to_text(&stimuli);
        std::fs::write(dir.join(format!("{name}.txt")), sentences)?;
        std::fs::write(dir.join(format!("{name}.meta.tsv")), meta)?;
    }
    std::fs::write(dir.join("bundle.tsv"), format!("seed\t{}\n", bundle.seed))?;
    Ok(())
}

pub fn read_bundle(dir: &Path, lexicon: Option<&Lexicon>) -> Result<StimulusBundle> {
    let read = |name: &str| -> Result<Vec<Stimulus>> {
        let sentences = std::fs::read_to_string(dir.join(format!("{name}.txt")))?;
        let meta = std::fs::read_to_string(dir.join(format!("{name}.meta.tsv")))?;
        stimuli_from_text(&sentences, &meta, lexicon)
    };
    let mut bundle = StimulusBundle {
        adaptation: Default::default(),
        test: Default::default(),
        seed: 0,
    };
    for s in read("adapt")? {
        bundle.adaptation[s.sentence_type.index()].push(s);
    }
    for s in read("test")? {
        bundle.test[s.sentence_type.index()].push(s);
    }
    let info = std::fs::read_to_string(dir.join("bundle.tsv"))?;
    for line in info.lines() {
        if let Some(rest) = line.strip_prefix("seed\t") {
            bundle.seed = rest.trim().parse().map_err(|_| Error::Parse {
                what: "bundle info",
                line: 1,
                msg: format!("bad seed `{rest}`"),
            })?;
        }
    }
    Ok(bundle)
}
