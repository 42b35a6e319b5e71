//! Felicity-constrained lexicon: verbs with explicit past forms, nouns
//! licensed as agents or patients of specific verbs, and noun-restricted
//! modifiers.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Built-in starter lexicon shipped with the crate.
pub const BUILTIN_LEXICON: &str = include_str!("../../data/lexicon.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pos {
    AgentNoun,
    PatientNoun,
    Verb,
    Modifier,
}

impl Pos {
    pub fn label(self) -> &'static str {
        match self {
            Pos::AgentNoun => "agent-noun",
            Pos::PatientNoun => "patient-noun",
            Pos::Verb => "verb",
            Pos::Modifier => "modifier",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    /// verb lemma -> past form (used in every frame)
    past_of: BTreeMap<String, String>,
    /// verb lemma -> nouns licensed as its agent
    agents_of: BTreeMap<String, BTreeSet<String>>,
    /// verb lemma -> nouns licensed as its patient
    patients_of: BTreeMap<String, BTreeSet<String>>,
    /// modifier lemma -> nouns it may precede
    modifiers: BTreeMap<String, BTreeSet<String>>,
    agent_nouns: BTreeSet<String>,
    patient_nouns: BTreeSet<String>,
}

impl Lexicon {
    pub fn builtin() -> Lexicon {
        Lexicon::parse(BUILTIN_LEXICON).expect("built-in lexicon must parse")
    }

    /// Parses the TSV lexicon format. `#` lines and blank lines are ignored.
    pub fn parse(text: &str) -> Result<Lexicon> {
        let what = "lexicon file";
        let mut lex = Lexicon::default();
        // (pos, noun lemma, verb partners) rows resolved after all verbs are known.
        let mut noun_rows: Vec<(Pos, String, Vec<String>, usize)> = Vec::new();
        let mut modifier_rows: Vec<(String, Vec<String>, usize)> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\n');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() < 2 {
                return Err(Error::Parse {
                    what,
                    line: lineno + 1,
                    msg: "expected pos<TAB>lemma<TAB>past-form?<TAB>partners".into(),
                });
            }
            let pos = match cols[0] {
                "verb" => Pos::Verb,
                "agent-noun" => Pos::AgentNoun,
                "patient-noun" => Pos::PatientNoun,
                "modifier" => Pos::Modifier,
                other => {
                    return Err(Error::Parse {
                        what,
                        line: lineno + 1,
                        msg: format!("unknown pos `{other}`"),
                    })
                }
            };
            let lemma = cols[1].to_string();
            if lemma.is_empty() || lemma.chars().any(char::is_whitespace) {
                return Err(Error::Parse {
                    what,
                    line: lineno + 1,
                    msg: format!("bad lemma `{lemma}`"),
                });
            }
            let past = cols.get(2).copied().unwrap_or("");
            let partners: Vec<String> = cols
                .get(3)
                .copied()
                .unwrap_or("")
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();

            match pos {
                Pos::Verb => {
                    if past.is_empty() {
                        return Err(Error::Parse {
                            what,
                            line: lineno + 1,
                            msg: format!("verb `{lemma}` is missing its past form"),
                        });
                    }
                    if !partners.is_empty() {
                        return Err(Error::Parse {
                            what,
                            line: lineno + 1,
                            msg: "verb licensing is declared on noun lines".into(),
                        });
                    }
                    if lex.past_of.insert(lemma.clone(), past.to_string()).is_some() {
                        return Err(Error::Parse {
                            what,
                            line: lineno + 1,
                            msg: format!("duplicate verb `{lemma}`"),
                        });
                    }
                }
                Pos::AgentNoun | Pos::PatientNoun => {
                    noun_rows.push((pos, lemma, partners, lineno + 1));
                }
                Pos::Modifier => modifier_rows.push((lemma, partners, lineno + 1)),
            }
        }

        for (pos, lemma, partners, lineno) in noun_rows {
            if partners.is_empty() {
                return Err(Error::Parse {
                    what,
                    line: lineno,
                    msg: format!("noun `{lemma}` licenses no verbs"),
                });
            }
            for verb in partners {
                if !lex.past_of.contains_key(&verb) {
                    return Err(Error::Parse {
                        what,
                        line: lineno,
                        msg: format!("noun `{lemma}` references unknown verb `{verb}`"),
                    });
                }
                match pos {
                    Pos::AgentNoun => {
                        lex.agents_of.entry(verb).or_default().insert(lemma.clone());
                    }
                    Pos::PatientNoun => {
                        lex.patients_of.entry(verb).or_default().insert(lemma.clone());
                    }
                    _ => unreachable!(),
                }
            }
            match pos {
                Pos::AgentNoun => lex.agent_nouns.insert(lemma),
                Pos::PatientNoun => lex.patient_nouns.insert(lemma),
                _ => unreachable!(),
            };
        }

        for (lemma, partners, lineno) in modifier_rows {
            let mut allowed = BTreeSet::new();
            for noun in partners {
                if !lex.agent_nouns.contains(&noun) && !lex.patient_nouns.contains(&noun) {
                    return Err(Error::Parse {
                        what,
                        line: lineno,
                        msg: format!("modifier `{lemma}` references unknown noun `{noun}`"),
                    });
                }
                allowed.insert(noun);
            }
            if lex.modifiers.insert(lemma.clone(), allowed).is_some() {
                return Err(Error::Parse {
                    what,
                    line: lineno,
                    msg: format!("duplicate modifier `{lemma}`"),
                });
            }
        }

        lex.validate()?;
        Ok(lex)
    }

    /// Every verb needs at least two licensed agents and two licensed patients.
    fn validate(&self) -> Result<()> {
        for verb in self.past_of.keys() {
            let n_agents = self.agents_of.get(verb).map_or(0, BTreeSet::len);
            let n_patients = self.patients_of.get(verb).map_or(0, BTreeSet::len);
            if n_agents < 2 {
                return Err(Error::LexiconTooSmall {
                    pos: "agent-noun",
                    msg: format!("verb `{verb}` has {n_agents} licensed agents; need >= 2"),
                });
            }
            if n_patients < 2 {
                return Err(Error::LexiconTooSmall {
                    pos: "patient-noun",
                    msg: format!("verb `{verb}` has {n_patients} licensed patients; need >= 2"),
                });
            }
        }
        Ok(())
    }

    pub fn verbs(&self) -> impl Iterator<Item = &String> {
        self.past_of.keys()
    }

    pub fn past(&self, verb: &str) -> Option<&str> {
        self.past_of.get(verb).map(String::as_str)
    }

    pub fn agents(&self, verb: &str) -> Option<&BTreeSet<String>> {
        self.agents_of.get(verb)
    }

    pub fn patients(&self, verb: &str) -> Option<&BTreeSet<String>> {
        self.patients_of.get(verb)
    }

    pub fn licenses_agent(&self, verb: &str, noun: &str) -> bool {
        self.agents_of.get(verb).is_some_and(|s| s.contains(noun))
    }

    pub fn licenses_patient(&self, verb: &str, noun: &str) -> bool {
        self.patients_of.get(verb).is_some_and(|s| s.contains(noun))
    }

    pub fn is_verb(&self, lemma: &str) -> bool {
        self.past_of.contains_key(lemma)
    }

    pub fn is_noun(&self, lemma: &str) -> bool {
        self.agent_nouns.contains(lemma) || self.patient_nouns.contains(lemma)
    }

    pub fn is_agent_noun(&self, lemma: &str) -> bool {
        self.agent_nouns.contains(lemma)
    }

    pub fn is_patient_noun(&self, lemma: &str) -> bool {
        self.patient_nouns.contains(lemma)
    }

    pub fn is_modifier(&self, lemma: &str) -> bool {
        self.modifiers.contains_key(lemma)
    }

    pub fn is_known(&self, lemma: &str) -> bool {
        self.is_verb(lemma) || self.is_noun(lemma) || self.is_modifier(lemma)
    }

    pub fn nouns(&self) -> BTreeSet<String> {
        self.agent_nouns.union(&self.patient_nouns).cloned().collect()
    }

    pub fn modifier_lemmas(&self) -> impl Iterator<Item = &String> {
        self.modifiers.keys()
    }

    pub fn modifier_allows(&self, modifier: &str, noun: &str) -> bool {
        self.modifiers
            .get(modifier)
            .is_some_and(|s| s.is_empty() || s.contains(noun))
    }

    /// Maps a surface occurring in a stimulus back to its content lemma:
    /// past forms map to the verb lemma, nouns and modifiers to themselves.
    pub fn lemma_of_surface(&self, surface: &str) -> Option<String> {
        if self.is_noun(surface) || self.is_modifier(surface) {
            return Some(surface.to_string());
        }
        self.past_of
            .iter()
            .find(|(_, past)| past.as_str() == surface)
            .map(|(lemma, _)| lemma.clone())
    }

    /// Every surface form a stimulus can contain besides function words.
    pub fn content_surfaces(&self) -> BTreeSet<String> {
        let mut out = self.nouns();
        out.extend(self.past_of.values().cloned());
        out.extend(self.modifiers.keys().cloned());
        out
    }
}

/// True iff both (verb, agent) and (verb, patient) pairs are licensed.
/// Unknown lemmas are an error.
pub fn check_felicity(verb: &str, agent: &str, patient: &str, lexicon: &Lexicon) -> Result<bool> {
    for lemma in [verb, agent, patient] {
        if !lexicon.is_known(lemma) {
            return Err(Error::UnknownLemma(lemma.to_string()));
        }
    }
    if !lexicon.is_verb(verb) {
        return Err(Error::UnknownLemma(format!("{verb} (not a verb)")));
    }
    Ok(lexicon.licenses_agent(verb, agent) && lexicon.licenses_patient(verb, patient))
}
