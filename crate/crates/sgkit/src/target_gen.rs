//! Interaction-aware target generation: parse image captions into
//! ⟨subject, predicate, object⟩ triplets, build bidirectional interaction
//! prompts (the reverse side phrased through a counter-action, e.g.
//! "hold" → "held by"), ground both prompts through a pluggable grounding
//! interface, and combine overlapping subject/object detections into
//! pseudo-supervision candidates.
//!
//! The caption parser is a deliberate small-grammar matcher over a bundled
//! lexicon — captions outside the grammar are skipped, never an error.
//! Grounding is an interface; the bundled implementation replays scripted
//! scenes so every downstream number is deterministic and checkable.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::iou;
use crate::types::{BoundingBox, TripletCandidate};

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// One parsed caption relation, lowercase-normalized.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct CaptionTriplet {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl CaptionTriplet {
    pub fn new<S: Into<String>>(subject: S, predicate: S, object: S) -> Result<Self> {
        let t = CaptionTriplet {
            subject: subject.into().to_lowercase(),
            predicate: predicate.into().to_lowercase(),
            object: object.into().to_lowercase(),
        };
        for (field, value) in [
            ("subject", &t.subject),
            ("predicate", &t.predicate),
            ("object", &t.object),
        ] {
            if value.is_empty() {
                return Err(Error::schema(field, "empty string"));
            }
        }
        Ok(t)
    }
}

/// Forward and reverse phrasing of one interaction.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct BidirectionalPrompt {
    /// "subject predicate object".
    pub forward: String,
    /// "object counter_action(predicate) subject".
    pub reverse: String,
}

/// Detections returned for one prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundingResult {
    pub phrase: String,
    pub boxes: Vec<(BoundingBox, f64)>,
}

/// Thresholds for combining grounded boxes into candidates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetGenConfig {
    /// Minimum subject-box/object-box IoU for an interacting pair.
    pub iou_threshold: f64,
    /// Minimum per-box confidence for either side.
    pub min_confidence: f64,
}

impl Default for TargetGenConfig {
    fn default() -> Self {
        TargetGenConfig {
            iou_threshold: 0.5,
            min_confidence: 0.0,
        }
    }
}

impl TargetGenConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("iou_threshold", self.iou_threshold),
            ("min_confidence", self.min_confidence),
        ] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::config(format!("{name} must lie in [0,1] (got {v})")));
            }
        }
        Ok(())
    }
}

/// Word classes the caption grammar recognizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    nouns: BTreeSet<String>,
    verbs: BTreeSet<String>,
    preps: BTreeSet<String>,
}

impl Lexicon {
    pub fn from_word_lists<S: AsRef<str>>(nouns: &[S], verbs: &[S], preps: &[S]) -> Self {
        let collect = |words: &[S]| {
            words
                .iter()
                .map(|w| w.as_ref().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect()
        };
        Lexicon {
            nouns: collect(nouns),
            verbs: collect(verbs),
            preps: collect(preps),
        }
    }

    fn from_newline_lists(nouns: &str, verbs: &str, preps: &str) -> Self {
        fn collect(text: &str) -> Vec<&str> {
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect()
        }
        Lexicon::from_word_lists(&collect(nouns), &collect(verbs), &collect(preps))
    }

    /// The lexicon bundled with the crate.
    pub fn builtin() -> &'static Lexicon {
        static BUILTIN: OnceLock<Lexicon> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            Lexicon::from_newline_lists(
                include_str!("../assets/nouns.txt"),
                include_str!("../assets/verbs.txt"),
                include_str!("../assets/preps.txt"),
            )
        })
    }

    pub fn is_noun(&self, word: &str) -> bool {
        self.nouns.contains(word)
    }

    pub fn is_verb(&self, word: &str) -> bool {
        self.verbs.contains(word)
    }

    pub fn is_prep(&self, word: &str) -> bool {
        self.preps.contains(word)
    }
}

#[derive(Debug)]
enum ParseState {
    Start,
    HaveSubject(String),
    HavePredicate {
        subject: String,
        predicate: String,
        // A verb may still absorb one trailing preposition ("sitting on").
        can_extend: bool,
    },
}

/// Extract ⟨subject, predicate, object⟩ triples matching the grammar
/// `NOUN (VERB [PREP] | PREP) NOUN` against the bundled lexicon. Articles
/// are skipped; any other unknown word resets the current phrase. The
/// scan resumes after each emitted object, so "people ride bike near
/// bikes on boat" yields ⟨people, ride, bike⟩ then ⟨bikes, on, boat⟩.
pub fn parse_caption(caption: &str) -> Vec<CaptionTriplet> {
    parse_caption_with(caption, Lexicon::builtin())
}

/// As [`parse_caption`], against a caller-supplied lexicon.
pub fn parse_caption_with(caption: &str, lexicon: &Lexicon) -> Vec<CaptionTriplet> {
    let mut out = Vec::new();
    let mut state = ParseState::Start;
    for raw in caption.split_whitespace() {
        let word = raw
            .trim_matches(|c: char| c.is_ascii_punctuation())
            .to_lowercase();
        if word.is_empty() || ARTICLES.contains(&word.as_str()) {
            continue;
        }
        state = match state {
            ParseState::Start => {
                if lexicon.is_noun(&word) {
                    ParseState::HaveSubject(word)
                } else {
                    ParseState::Start
                }
            }
            ParseState::HaveSubject(subject) => {
                if lexicon.is_verb(&word) {
                    ParseState::HavePredicate {
                        subject,
                        predicate: word,
                        can_extend: true,
                    }
                } else if lexicon.is_prep(&word) {
                    ParseState::HavePredicate {
                        subject,
                        predicate: word,
                        can_extend: false,
                    }
                } else if lexicon.is_noun(&word) {
                    // The most recent noun starts the phrase.
                    ParseState::HaveSubject(word)
                } else {
                    ParseState::Start
                }
            }
            ParseState::HavePredicate {
                subject,
                predicate,
                can_extend,
            } => {
                if lexicon.is_noun(&word) {
                    out.push(CaptionTriplet {
                        subject,
                        predicate,
                        object: word,
                    });
                    ParseState::Start
                } else if can_extend && lexicon.is_prep(&word) {
                    ParseState::HavePredicate {
                        subject,
                        predicate: format!("{predicate} {word}"),
                        can_extend: false,
                    }
                } else {
                    ParseState::Start
                }
            }
        };
    }
    out
}

/// Source of passive/inverse phrasings for predicates.
pub trait CounterActionProvider {
    /// The counter-action for `predicate`, if this provider knows one.
    fn counter_phrase(&self, predicate: &str) -> Option<String>;
}

/// Table-backed provider loaded from `predicate<TAB>counter_phrase` lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterActionTable {
    map: BTreeMap<String, String>,
}

impl CounterActionTable {
    /// Parse the TSV table format. Blank lines are allowed; a line
    /// without a tab or with an empty side is a schema error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (predicate, phrase) = line.split_once('\t').ok_or_else(|| {
                Error::schema(
                    format!("line {}", lineno + 1),
                    "expected `predicate<TAB>counter_phrase`",
                )
            })?;
            let predicate = predicate.trim().to_lowercase();
            let phrase = phrase.trim().to_lowercase();
            if predicate.is_empty() || phrase.is_empty() {
                return Err(Error::schema(
                    format!("line {}", lineno + 1),
                    "empty predicate or counter phrase",
                ));
            }
            map.insert(predicate, phrase);
        }
        Ok(CounterActionTable { map })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        CounterActionTable::parse(&text)
    }

    /// The table bundled with the crate.
    pub fn builtin() -> &'static CounterActionTable {
        static BUILTIN: OnceLock<CounterActionTable> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            CounterActionTable::parse(include_str!("../assets/counter_actions.tsv"))
                .expect("bundled counter-action table must parse")
        })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl CounterActionProvider for CounterActionTable {
    fn counter_phrase(&self, predicate: &str) -> Option<String> {
        self.map.get(&predicate.to_lowercase()).cloned()
    }
}

/// The counter-action of `predicate`: the provider's phrase when known,
/// otherwise the generic passive fallback "`predicate` by".
pub fn counter_action(predicate: &str, provider: &dyn CounterActionProvider) -> String {
    provider
        .counter_phrase(predicate)
        .unwrap_or_else(|| format!("{} by", predicate.to_lowercase()))
}

/// Build the forward/reverse prompt pair for one triplet.
pub fn build_prompts(
    triplet: &CaptionTriplet,
    provider: &dyn CounterActionProvider,
) -> BidirectionalPrompt {
    BidirectionalPrompt {
        forward: format!(
            "{} {} {}",
            triplet.subject, triplet.predicate, triplet.object
        ),
        reverse: format!(
            "{} {} {}",
            triplet.object,
            counter_action(&triplet.predicate, provider),
            triplet.subject
        ),
    }
}

/// Phrase grounding interface. Implementations must be deterministic per
/// (scene, phrase) and safe to call concurrently.
pub trait Grounder {
    fn ground_phrase(&self, phrase: &str) -> Result<Vec<(BoundingBox, f64)>>;
}

/// Ground one prompt, attaching the prompt to any grounder failure.
pub fn ground(prompt: &str, grounder: &dyn Grounder) -> Result<GroundingResult> {
    let boxes = grounder
        .ground_phrase(prompt)
        .map_err(|e| Error::Grounding {
            prompt: prompt.to_string(),
            message: e.to_string(),
        })?;
    Ok(GroundingResult {
        phrase: prompt.to_string(),
        boxes,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetection {
    #[serde(rename = "box")]
    box_: [f64; 4],
    conf: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScript {
    scene_id: String,
    phrases: BTreeMap<String, Vec<RawDetection>>,
}

/// Scripted grounder: replays detections planted in a scene script.
/// Phrases absent from the script ground to an empty list.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedGrounder {
    scene_id: String,
    phrases: BTreeMap<String, Vec<(BoundingBox, f64)>>,
}

impl ScriptedGrounder {
    pub fn from_script_str(text: &str) -> Result<Self> {
        let raw: RawScript = serde_json::from_str(text).map_err(|source| Error::Json {
            path: PathBuf::from("<scene script>"),
            source,
        })?;
        if raw.scene_id.is_empty() {
            return Err(Error::schema("scene_id", "empty string"));
        }
        let mut phrases = BTreeMap::new();
        for (phrase, detections) in raw.phrases {
            let mut boxes = Vec::with_capacity(detections.len());
            for (i, d) in detections.iter().enumerate() {
                let [cx, cy, w, h] = d.box_;
                let bbox = BoundingBox::new(cx, cy, w, h).map_err(|e| {
                    Error::schema(format!("phrases.{phrase}[{i}].box"), e.to_string())
                })?;
                if !(0.0..=1.0).contains(&d.conf) || !d.conf.is_finite() {
                    return Err(Error::schema(
                        format!("phrases.{phrase}[{i}].conf"),
                        format!("confidence must lie in [0,1] (got {})", d.conf),
                    ));
                }
                boxes.push((bbox, d.conf));
            }
            phrases.insert(phrase, boxes);
        }
        Ok(ScriptedGrounder {
            scene_id: raw.scene_id,
            phrases,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        ScriptedGrounder::from_script_str(&text).map_err(|e| match e {
            Error::Json { source, .. } => Error::Json {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    pub fn scene_id(&self) -> &str {
        &self.scene_id
    }

    pub fn phrase_count(&self) -> usize {
        self.phrases.len()
    }
}

impl Grounder for ScriptedGrounder {
    fn ground_phrase(&self, phrase: &str) -> Result<Vec<(BoundingBox, f64)>> {
        Ok(self.phrases.get(phrase).cloned().unwrap_or_default())
    }
}

/// Combine grounded subject and object boxes into candidates: every
/// cross pair whose boxes overlap with IoU ≥ `cfg.iou_threshold` and
/// whose confidences both reach `cfg.min_confidence`. Candidate
/// confidence is the product of the two box confidences.
pub fn combine(
    subject_result: &GroundingResult,
    object_result: &GroundingResult,
    triplet: &CaptionTriplet,
    cfg: &TargetGenConfig,
) -> Vec<TripletCandidate> {
    let mut out = Vec::new();
    for (s_box, s_conf) in &subject_result.boxes {
        if *s_conf < cfg.min_confidence {
            continue;
        }
        for (o_box, o_conf) in &object_result.boxes {
            if *o_conf < cfg.min_confidence {
                continue;
            }
            if iou(s_box, o_box) >= cfg.iou_threshold {
                out.push(
                    TripletCandidate::new(
                        triplet.subject.clone(),
                        triplet.predicate.clone(),
                        triplet.object.clone(),
                        *s_box,
                        *o_box,
                        s_conf * o_conf,
                    )
                    .expect("validated inputs produce a valid candidate"),
                );
            }
        }
    }
    out
}

/// Full pipeline for one caption against one scene: parse, build
/// bidirectional prompts, ground both sides (the forward prompt answers
/// the subject phrase, the reverse prompt — whose syntactic subject is
/// the object — answers the object phrase), and combine.
pub fn generate_targets(
    caption: &str,
    grounder: &dyn Grounder,
    provider: &dyn CounterActionProvider,
    cfg: &TargetGenConfig,
) -> Result<Vec<TripletCandidate>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for triplet in parse_caption(caption) {
        let prompts = build_prompts(&triplet, provider);
        let subject_result = ground(&prompts.forward, grounder)?;
        let object_result = ground(&prompts.reverse, grounder)?;
        out.extend(combine(&subject_result, &object_result, &triplet, cfg));
    }
    Ok(out)
}

/// Object-category-only baseline: grounds the bare subject and object
/// class names instead of the interaction phrases, then pairs boxes the
/// same way. Without the interaction context in the prompt, every
/// instance of a class matches — including bystanders not taking part in
/// the relation — so on scenes with same-class distractors this mode
/// over-generates where [`generate_targets`] stays exact. It exists as
/// the comparison arm for that effect, not as a production path.
pub fn baseline_targets(
    caption: &str,
    grounder: &dyn Grounder,
    cfg: &TargetGenConfig,
) -> Result<Vec<TripletCandidate>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for triplet in parse_caption(caption) {
        let subject_result = ground(&triplet.subject, grounder)?;
        let object_result = ground(&triplet.object, grounder)?;
        out.extend(combine(&subject_result, &object_result, &triplet, cfg));
    }
    Ok(out)
}
