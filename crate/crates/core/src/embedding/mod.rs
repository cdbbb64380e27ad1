//! Co-occurrence statistics, GloVe training and cosine neighbor search.

mod cooc;
mod glove;
mod neighbors;

pub use cooc::{count_cooccurrences, count_issue_cooccurrences, CoocCounter, CoocEntry, CoocMatrix, MAX_WINDOW};
pub use glove::{
    glove_gradient, glove_loss, glove_train, train_model, EmbeddingModel, GloveConfig, Gradient, TrainMode, TrainReport,
};
pub use neighbors::{cosine_similarity, Neighbor, NeighborList, WordVectors};
