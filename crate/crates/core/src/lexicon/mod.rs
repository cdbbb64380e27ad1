//! Lexicon bootstrapping: seed selection from a general-purpose norms file,
//! candidate expansion through WordNet synonyms and embedding neighbors, the
//! rating-sheet round-trip, rater agreement and the rated domain lexicon.

pub mod agreement;
pub mod candidates;
pub mod general;
pub mod sea;
pub mod seeds;
pub mod sheet;

pub use agreement::{
    pearson_r, rater_agreement, weighted_kappa, weighted_kappa_from_confusion, AgreementReport, Correlation,
    RaterSummary, Weighting,
};
pub use candidates::{
    apply_review, expand_embedding, expand_wordnet, load_review, Candidate, CandidateSet, Decision, Provenance, Status,
};
pub use general::{load_general_lexicon, ColumnMap, GeneralEntry, GeneralLexicon, LoadedGeneral};
pub use sea::{aggregate_ratings, SeaEntry, SeaLexicon};
pub use seeds::{load_seed_list, select_seeds, Pole, Seed, SeedConfig, SeedListEntry, SeedSet, SeedSource};
pub use sheet::{
    generate_sheet, ingest_ratings, load_ratings, save_ratings, RatedSheet, RatingIngest, RatingRecord, RowError,
    Sheet, SheetOptions, DEFAULT_INSTRUCTIONS,
};
