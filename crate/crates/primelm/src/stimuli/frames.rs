//! Sentence frames for the seven stimulus types.

use super::lexicon::Lexicon;

/// The seven stimulus sentence types: five relative-clause types and two
/// lexically matched coordination controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SentenceType {
    UnreducedObjRc,
    ReducedObjRc,
    UnreducedPassSubjRc,
    ReducedPassSubjRc,
    ActiveSubjRc,
    PassObjMatchedCoord,
    ActiveSubjMatchedCoord,
}

pub const SENTENCE_TYPES: [SentenceType; 7] = [
    SentenceType::UnreducedObjRc,
    SentenceType::ReducedObjRc,
    SentenceType::UnreducedPassSubjRc,
    SentenceType::ReducedPassSubjRc,
    SentenceType::ActiveSubjRc,
    SentenceType::PassObjMatchedCoord,
    SentenceType::ActiveSubjMatchedCoord,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Voice {
    Active,
    Passive,
}

impl SentenceType {
    pub fn index(self) -> usize {
        SENTENCE_TYPES.iter().position(|t| *t == self).unwrap()
    }

    pub fn label(self) -> &'static str {
        match self {
            SentenceType::UnreducedObjRc => "unreduced_obj_rc",
            SentenceType::ReducedObjRc => "reduced_obj_rc",
            SentenceType::UnreducedPassSubjRc => "unreduced_pass_subj_rc",
            SentenceType::ReducedPassSubjRc => "reduced_pass_subj_rc",
            SentenceType::ActiveSubjRc => "active_subj_rc",
            SentenceType::PassObjMatchedCoord => "pass_obj_coord",
            SentenceType::ActiveSubjMatchedCoord => "active_subj_coord",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            SentenceType::UnreducedObjRc => "Unreduced Obj RC",
            SentenceType::ReducedObjRc => "Reduced Obj RC",
            SentenceType::UnreducedPassSubjRc => "Unreduced Pass RC",
            SentenceType::ReducedPassSubjRc => "Reduced Pass RC",
            SentenceType::ActiveSubjRc => "Active Subj RC",
            SentenceType::PassObjMatchedCoord => "Pass/Obj Coord",
            SentenceType::ActiveSubjMatchedCoord => "Subj Coord",
        }
    }

    pub fn from_label(label: &str) -> Option<SentenceType> {
        SENTENCE_TYPES.iter().copied().find(|t| t.label() == label)
    }

    pub fn is_rc(self) -> bool {
        !matches!(
            self,
            SentenceType::PassObjMatchedCoord | SentenceType::ActiveSubjMatchedCoord
        )
    }

    /// Voice of the relative clause; coordination controls inherit the voice
    /// of the RC type they are lexically matched to.
    pub fn voice(self) -> Voice {
        match self {
            SentenceType::UnreducedPassSubjRc
            | SentenceType::ReducedPassSubjRc
            | SentenceType::PassObjMatchedCoord => Voice::Passive,
            _ => Voice::Active,
        }
    }

    /// Whether the relativizer is omitted. Only meaningful for RC types.
    pub fn is_reduced(self) -> Option<bool> {
        match self {
            SentenceType::UnreducedObjRc | SentenceType::UnreducedPassSubjRc => Some(false),
            SentenceType::ReducedObjRc | SentenceType::ReducedPassSubjRc => Some(true),
            _ => None,
        }
    }
}

/// Noun slots: N1 is the patient of the RC verb, N2 its agent, N3 the object
/// of the main-clause verb.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NounRole {
    RcPatient,
    RcAgent,
    MainPatient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerbRole {
    Rc,
    Main,
}

/// One template position. `Mod` slots are optional adjectives attached to the
/// noun slot that follows them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    Lit(&'static str),
    Mod(NounRole),
    Noun(NounRole),
    Verb(VerbRole),
    /// Relative-clause extraction site; realizes to no token, but its position
    /// is recorded as the stimulus gap index.
    Gap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub sentence_type: SentenceType,
    pub slots: Vec<Slot>,
}

use NounRole::{MainPatient, RcAgent, RcPatient};
use Slot::{Gap, Lit, Mod, Noun, Verb};
use VerbRole::{Main, Rc};

/// The built-in frame inventory. The main clause's subject is N1 for every
/// patient-initial type and N2 for the agent-initial ones.
pub fn builtin_frames() -> Vec<Frame> {
    vec![
        // the N1 that the N2 V-ed _ V2-ed the N3 .
        Frame {
            sentence_type: SentenceType::UnreducedObjRc,
            slots: vec![
                Lit("the"), Mod(RcPatient), Noun(RcPatient), Lit("that"), Lit("the"),
                Mod(RcAgent), Noun(RcAgent), Verb(Rc), Gap, Verb(Main), Lit("the"),
                Mod(MainPatient), Noun(MainPatient), Lit("."),
            ],
        },
        // the N1 the N2 V-ed _ V2-ed the N3 .
        Frame {
            sentence_type: SentenceType::ReducedObjRc,
            slots: vec![
                Lit("the"), Mod(RcPatient), Noun(RcPatient), Lit("the"), Mod(RcAgent),
                Noun(RcAgent), Verb(Rc), Gap, Verb(Main), Lit("the"), Mod(MainPatient),
                Noun(MainPatient), Lit("."),
            ],
        },
        // the N1 that was V-ed _ by the N2 V2-ed the N3 .
        Frame {
            sentence_type: SentenceType::UnreducedPassSubjRc,
            slots: vec![
                Lit("the"), Mod(RcPatient), Noun(RcPatient), Lit("that"), Lit("was"),
                Verb(Rc), Gap, Lit("by"), Lit("the"), Mod(RcAgent), Noun(RcAgent),
                Verb(Main), Lit("the"), Mod(MainPatient), Noun(MainPatient), Lit("."),
            ],
        },
        // the N1 V-ed _ by the N2 V2-ed the N3 .
        Frame {
            sentence_type: SentenceType::ReducedPassSubjRc,
            slots: vec![
                Lit("the"), Mod(RcPatient), Noun(RcPatient), Verb(Rc), Gap, Lit("by"),
                Lit("the"), Mod(RcAgent), Noun(RcAgent), Verb(Main), Lit("the"),
                Mod(MainPatient), Noun(MainPatient), Lit("."),
            ],
        },
        // the N2 that _ V-ed the N1 V2-ed the N3 .
        Frame {
            sentence_type: SentenceType::ActiveSubjRc,
            slots: vec![
                Lit("the"), Mod(RcAgent), Noun(RcAgent), Lit("that"), Gap, Verb(Rc),
                Lit("the"), Mod(RcPatient), Noun(RcPatient), Verb(Main), Lit("the"),
                Mod(MainPatient), Noun(MainPatient), Lit("."),
            ],
        },
        // the N1 was V-ed by the N2 and V2-ed the N3 .
        // Coordination control lexically matched to the patient-initial
        // (object / passive-subject) RC types.
        Frame {
            sentence_type: SentenceType::PassObjMatchedCoord,
            slots: vec![
                Lit("the"), Mod(RcPatient), Noun(RcPatient), Lit("was"), Verb(Rc),
                Lit("by"), Lit("the"), Mod(RcAgent), Noun(RcAgent), Lit("and"),
                Verb(Main), Lit("the"), Mod(MainPatient), Noun(MainPatient), Lit("."),
            ],
        },
        // the N2 V-ed the N1 and V2-ed the N3 .
        Frame {
            sentence_type: SentenceType::ActiveSubjMatchedCoord,
            slots: vec![
                Lit("the"), Mod(RcAgent), Noun(RcAgent), Verb(Rc), Lit("the"),
                Mod(RcPatient), Noun(RcPatient), Lit("and"), Verb(Main), Lit("the"),
                Mod(MainPatient), Noun(MainPatient), Lit("."),
            ],
        },
    ]
}

/// Chosen fillers for one frame realization.
#[derive(Debug, Clone)]
pub struct Fillers {
    pub rc_patient: String,
    pub rc_agent: String,
    pub main_patient: String,
    pub rc_verb_past: String,
    pub main_verb_past: String,
    /// Modifier surface per noun role, in frame order of `Mod` slots.
    pub modifiers: [Option<String>; 3],
}

impl Fillers {
    fn noun(&self, role: NounRole) -> &str {
        match role {
            RcPatient => &self.rc_patient,
            RcAgent => &self.rc_agent,
            MainPatient => &self.main_patient,
        }
    }

    fn modifier(&self, role: NounRole) -> Option<&str> {
        self.modifiers[match role {
            RcPatient => 0,
            RcAgent => 1,
            MainPatient => 2,
        }]
        .as_deref()
    }
}

/// Lays out the frame with the given fillers. Returns the token sequence and
/// the gap index (position the extracted phrase would occupy; -1 if the frame
/// has no gap).
pub fn realize(frame: &Frame, fillers: &Fillers) -> (Vec<String>, i32) {
    let mut tokens = Vec::new();
    let mut gap = -1i32;
    for slot in &frame.slots {
        match slot {
            Lit(s) => tokens.push((*s).to_string()),
            Mod(role) => {
                if let Some(m) = fillers.modifier(*role) {
                    tokens.push(m.to_string());
                }
            }
            Noun(role) => tokens.push(fillers.noun(*role).to_string()),
            Verb(Rc) => tokens.push(fillers.rc_verb_past.clone()),
            Verb(Main) => tokens.push(fillers.main_verb_past.clone()),
            Gap => gap = tokens.len() as i32,
        }
    }
    (tokens, gap)
}

/// Checks that a token sequence is a realization of the frame: literals match
/// exactly, noun slots hold known nouns, verb slots hold known past forms, and
/// modifier slots hold zero or one known modifier.
pub fn matches(frame: &Frame, tokens: &[String], lexicon: &Lexicon) -> bool {
    fn rec(slots: &[Slot], tokens: &[String], lexicon: &Lexicon) -> bool {
        match slots.first() {
            None => tokens.is_empty(),
            Some(Gap) => rec(&slots[1..], tokens, lexicon),
            Some(Lit(s)) => {
                tokens.first().map(String::as_str) == Some(*s)
                    && rec(&slots[1..], &tokens[1..], lexicon)
            }
            Some(Mod(_)) => {
                // without the modifier
                if rec(&slots[1..], tokens, lexicon) {
                    return true;
                }
                match tokens.first() {
                    Some(t) if lexicon.is_modifier(t) => rec(&slots[1..], &tokens[1..], lexicon),
                    _ => false,
                }
            }
            Some(Noun(role)) => match tokens.first() {
                Some(t) => {
                    let ok = match role {
                        RcPatient | MainPatient => lexicon.is_patient_noun(t),
                        RcAgent => lexicon.is_agent_noun(t),
                    };
                    ok && rec(&slots[1..], &tokens[1..], lexicon)
                }
                None => false,
            },
            Some(Verb(_)) => match tokens.first() {
                Some(t) => {
                    lexicon.lemma_of_surface(t).is_some_and(|l| lexicon.is_verb(&l))
                        && rec(&slots[1..], &tokens[1..], lexicon)
                }
                None => false,
            },
        }
    }
    rec(&frame.slots, tokens, lexicon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain_fillers() -> Fillers {
        Fillers {
            rc_patient: "cake".into(),
            rc_agent: "baker".into(),
            main_patient: "customers".into(),
            rc_verb_past: "baked".into(),
            main_verb_past: "impressed".into(),
            modifiers: [None, None, None],
        }
    }

    fn frame_for(t: SentenceType) -> Frame {
        builtin_frames().into_iter().find(|f| f.sentence_type == t).unwrap()
    }

    #[test]
    fn unreduced_obj_rc_matches_paper_example() {
        let (tokens, gap) = realize(&frame_for(SentenceType::UnreducedObjRc), &plain_fillers());
        assert_eq!(
            tokens.join(" "),
            "the cake that the baker baked impressed the customers ."
        );
        // gap right after the RC verb, i.e. at the main verb position
        assert_eq!(gap, 6);
    }

    #[test]
    fn active_subj_rc_matches_paper_example() {
        let (tokens, gap) = realize(&frame_for(SentenceType::ActiveSubjRc), &plain_fillers());
        assert_eq!(
            tokens.join(" "),
            "the baker that baked the cake impressed the customers ."
        );
        assert_eq!(gap, 3);
    }

    #[test]
    fn remaining_frames_realize_as_documented() {
        let f = plain_fillers();
        let cases = [
            (SentenceType::ReducedObjRc, "the cake the baker baked impressed the customers ."),
            (
                SentenceType::UnreducedPassSubjRc,
                "the cake that was baked by the baker impressed the customers .",
            ),
            (
                SentenceType::ReducedPassSubjRc,
                "the cake baked by the baker impressed the customers .",
            ),
            (
                SentenceType::PassObjMatchedCoord,
                "the cake was baked by the baker and impressed the customers .",
            ),
            (
                SentenceType::ActiveSubjMatchedCoord,
                "the baker baked the cake and impressed the customers .",
            ),
        ];
        for (t, want) in cases {
            let (tokens, gap) = realize(&frame_for(t), &f);
            assert_eq!(tokens.join(" "), want, "{t:?}");
            assert_eq!(gap >= 0, t.is_rc(), "{t:?}");
        }
    }

    #[test]
    fn modifiers_are_inserted_before_their_noun() {
        let mut f = plain_fillers();
        f.modifiers[0] = Some("fresh".into());
        let (tokens, _) = realize(&frame_for(SentenceType::UnreducedObjRc), &f);
        assert_eq!(
            tokens.join(" "),
            "the fresh cake that the baker baked impressed the customers ."
        );
    }

    #[test]
    fn realized_tokens_match_their_frame() {
        let lex = Lexicon::builtin();
        let mut f = plain_fillers();
        f.modifiers[1] = Some("famous".into());
        for frame in builtin_frames() {
            let (tokens, _) = realize(&frame, &f);
            assert!(matches(&frame, &tokens, &lex), "{:?}", frame.sentence_type);
        }
    }

    #[test]
    fn matches_rejects_other_frames() {
        let lex = Lexicon::builtin();
        let (tokens, _) = realize(&frame_for(SentenceType::UnreducedObjRc), &plain_fillers());
        assert!(!matches(&frame_for(SentenceType::ActiveSubjRc), &tokens, &lex));
        assert!(!matches(&frame_for(SentenceType::ReducedObjRc), &tokens, &lex));
    }

    #[test]
    fn type_attributes() {
        assert_eq!(SENTENCE_TYPES.len(), 7);
        assert_eq!(SENTENCE_TYPES.iter().filter(|t| t.is_rc()).count(), 5);
        assert_eq!(SentenceType::UnreducedObjRc.voice(), Voice::Active);
        assert_eq!(SentenceType::ReducedPassSubjRc.voice(), Voice::Passive);
        assert_eq!(SentenceType::UnreducedObjRc.is_reduced(), Some(false));
        assert_eq!(SentenceType::ReducedPassSubjRc.is_reduced(), Some(true));
        assert_eq!(SentenceType::ActiveSubjRc.is_reduced(), None);
        for (i, t) in SENTENCE_TYPES.iter().enumerate() {
            assert_eq!(t.index(), i);
            assert_eq!(SentenceType::from_label(t.label()), Some(*t));
        }
    }
}
