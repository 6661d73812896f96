//! Evaluation metrics: corpus-level BLEU-4 and SSIM.

mod bleu;
mod ssim;

pub use bleu::{bleu4, tokenize, BleuConfig, BleuReport, NgramStats, TokenizeLang, MAX_ORDER};
pub use ssim::{ssim, ssim_with, FrameImage, SsimConfig};
