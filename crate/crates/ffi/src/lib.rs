//! C ABI over the channelscope library.
//!
//! Objects cross the boundary as opaque handles created by a `*_new`,
//! `*_load` or `*_builtin` function and released with the matching
//! `*_free`. Every fallible function returns a [`CsStatus`]; on failure a
//! description is available from [`cs_last_error_message`] on the same
//! thread. Panics never unwind into the caller.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;
use std::slice;

use channelscope::corpus::Source;
use channelscope::embedding::{self, EmbeddingError, EmbeddingModel, SgnsConfig};
use channelscope::lexicon::{count_categories, normalize_vector, CategoryLexicon, LexiconError};
use channelscope::pipeline::{self, PipelineError, RunConfig};
use channelscope::weat::{self, Comparison, OovPolicy, PermutationOptions, WeatError, WeatSpec};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A file could not be read or written.
    Io = 3,
    /// Input text or a model file was malformed.
    Parse = 4,
    /// A run configuration was rejected.
    Config = 5,
    /// The data could not be analysed (empty vocabulary, zero-sum profile, ...).
    Data = 6,
    /// A word is missing from the embedding vocabulary.
    OutOfVocabulary = 7,
    /// A numeric argument or buffer size was out of range.
    InvalidArgument = 8,
    /// An internal panic was caught.
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsOovPolicy {
    Strict = 0,
    Balance = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsComparison {
    /// Count partitions with a strictly greater statistic.
    Greater = 0,
    /// Count partitions with a greater or equal statistic.
    GreaterOrEqual = 1,
}

/// Category lexicon handle.
pub struct CsLexicon {
    lexicon: CategoryLexicon,
    names: Vec<CString>,
}

/// Embedding model handle.
pub struct CsEmbedding {
    model: EmbeddingModel,
}

/// WEAT specification handle.
pub struct CsWeatSpec {
    spec: WeatSpec,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CsWeatResult {
    pub statistic: f64,
    /// Cohen's d; meaningful only when `has_effect_size` is true.
    pub effect_size: f64,
    pub has_effect_size: bool,
    pub p_value: f64,
    pub partitions: u64,
    /// Words removed by the balance policy.
    pub dropped: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CsBoxStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    /// Number of points beyond the fences.
    pub outliers: usize,
}

// ---------------------------------------------------------------------------
// errors

struct Failure {
    status: CsStatus,
    message: String,
}

impl Failure {
    fn new(status: CsStatus, message: impl ToString) -> Self {
        Self {
            status,
            message: message.to_string(),
        }
    }
}

impl From<EmbeddingError> for Failure {
    fn from(e: EmbeddingError) -> Self {
        let status = match &e {
            EmbeddingError::OutOfVocabulary(_) => CsStatus::OutOfVocabulary,
            EmbeddingError::Io(_) => CsStatus::Io,
            EmbeddingError::VersionMismatch(_)
            | EmbeddingError::Truncated
            | EmbeddingError::Format { .. } => CsStatus::Parse,
            EmbeddingError::InvalidConfig(_) => CsStatus::InvalidArgument,
            EmbeddingError::EmptyVocabulary(_) | EmbeddingError::NonFinite { .. } => CsStatus::Data,
        };
        Failure::new(status, e)
    }
}

impl From<WeatError> for Failure {
    fn from(e: WeatError) -> Self {
        let status = match &e {
            WeatError::Io { .. } => CsStatus::Io,
            WeatError::Parse { .. } | WeatError::InvalidSpec { .. } => CsStatus::Parse,
            WeatError::OutOfVocabulary(_) => CsStatus::OutOfVocabulary,
            WeatError::CeilingExceeded { .. } => CsStatus::InvalidArgument,
            WeatError::ZeroVariance | WeatError::EmptyAfterDrop { .. } => CsStatus::Data,
        };
        Failure::new(status, e)
    }
}

impl From<LexiconError> for Failure {
    fn from(e: LexiconError) -> Self {
        let status = match &e {
            LexiconError::Io { .. } => CsStatus::Io,
            LexiconError::Parse { .. }
            | LexiconError::DuplicateCategory(_)
            | LexiconError::EmptyCategory(_)
            | LexiconError::MissingCategory(_) => CsStatus::Parse,
            _ => CsStatus::Data,
        };
        Failure::new(status, e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let status = match &e {
            PipelineError::Config { .. } => CsStatus::Config,
            PipelineError::Data { .. } => CsStatus::Data,
            PipelineError::Output { .. } => CsStatus::Io,
        };
        Failure::new(status, e)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("NUL bytes replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

/// Run `body`, recording any failure or panic for [`cs_last_error_message`].
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CsStatus {
    match panic::catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CsStatus::Ok,
        Ok(Err(f)) => {
            set_last_error(&f.message);
            f.status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| payload.downcast_ref::<&str>().copied())
                .unwrap_or("unknown panic");
            set_last_error(&format!("internal panic: {message}"));
            CsStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(
            CsStatus::NullArgument,
            format!("`{name}` is null"),
        ))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be null or a NUL-terminated string valid for the call.
unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    non_null(p, name)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(CsStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn path(p: *const c_char, name: &str) -> Result<PathBuf, Failure> {
    text(p, name).map(PathBuf::from)
}

/// # Safety
/// `out` must be null or valid for one write.
unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    non_null(out, name)?;
    out.write(value);
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    non_null(p, name)?;
    Ok(&*p)
}

/// # Safety
/// `tokens` must point to `n` valid strings unless `n` is 0.
unsafe fn token_list(tokens: *const *const c_char, n: usize) -> Result<Vec<String>, Failure> {
    if n == 0 {
        return Ok(Vec::new());
    }
    non_null(tokens, "tokens")?;
    slice::from_raw_parts(tokens, n)
        .iter()
        .map(|&t| text(t, "tokens[i]").map(str::to_string))
        .collect()
}

/// # Safety
/// `buf` must be valid for `len` writes unless `len` is 0.
unsafe fn output_buffer<'a, T>(
    buf: *mut T,
    len: usize,
    needed: usize,
) -> Result<&'a mut [T], Failure> {
    if len < needed {
        return Err(Failure::new(
            CsStatus::InvalidArgument,
            format!("buffer holds {len} values, {needed} needed"),
        ));
    }
    if needed == 0 {
        return Ok(&mut []);
    }
    non_null(buf, "buffer")?;
    Ok(slice::from_raw_parts_mut(buf, needed))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static name of a status code, e.g. `"out_of_vocabulary"`.
#[no_mangle]
pub extern "C" fn cs_status_name(status: CsStatus) -> *const c_char {
    let name: &'static CStr = match status {
        CsStatus::Ok => c"ok",
        CsStatus::NullArgument => c"null_argument",
        CsStatus::InvalidUtf8 => c"invalid_utf8",
        CsStatus::Io => c"io",
        CsStatus::Parse => c"parse",
        CsStatus::Config => c"config",
        CsStatus::Data => c"data",
        CsStatus::OutOfVocabulary => c"out_of_vocabulary",
        CsStatus::InvalidArgument => c"invalid_argument",
        CsStatus::Panic => c"panic",
    };
    name.as_ptr()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cs_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => c"unknown",
        };
    VERSION.as_ptr()
}

// ---------------------------------------------------------------------------
// lexicon

fn lexicon_handle(lexicon: CategoryLexicon) -> *mut CsLexicon {
    let names = lexicon
        .names()
        .into_iter()
        .map(|n| CString::new(n).expect("category names contain no NUL"))
        .collect();
    Box::into_raw(Box::new(CsLexicon { lexicon, names }))
}

/// The bundled 20-category lexicon.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cs_lexicon_bundled(out: *mut *mut CsLexicon) -> CsStatus {
    guard(|| put(out, lexicon_handle(CategoryLexicon::bundled()), "out"))
}

/// Load a lexicon file (one category per line: name, polarity, words).
///
/// # Safety
/// `file` must be a NUL-terminated string; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cs_lexicon_load(
    file: *const c_char,
    out: *mut *mut CsLexicon,
) -> CsStatus {
    guard(|| {
        let lexicon = CategoryLexicon::load(&path(file, "file")?)?;
        put(out, lexicon_handle(lexicon), "out")
    })
}

/// Number of categories, or 0 for a null handle.
///
/// # Safety
/// `lexicon` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_lexicon_len(lexicon: *const CsLexicon) -> usize {
    lexicon.as_ref().map_or(0, |l| l.lexicon.len())
}

/// Name of category `index`, or null when out of range. Owned by the handle.
///
/// # Safety
/// `lexicon` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_lexicon_category_name(
    lexicon: *const CsLexicon,
    index: usize,
) -> *const c_char {
    lexicon
        .as_ref()
        .and_then(|l| l.names.get(index))
        .map_or(ptr::null(), |n| n.as_ptr())
}

/// Per-category counts of `n_tokens` lemmatized tokens. A token in several
/// categories counts in each. `counts` must hold `cs_lexicon_len` values.
///
/// # Safety
/// `tokens` must point to `n_tokens` NUL-terminated strings and `counts` to
/// `counts_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn cs_lexicon_count(
    lexicon: *const CsLexicon,
    tokens: *const *const c_char,
    n_tokens: usize,
    counts: *mut u64,
    counts_len: usize,
) -> CsStatus {
    guard(|| {
        let l = handle(lexicon, "lexicon")?;
        let tokens = token_list(tokens, n_tokens)?;
        let out = output_buffer(counts, counts_len, l.lexicon.len())?;
        let cv = count_categories("", Source::Caption, &tokens, &l.lexicon);
        out.copy_from_slice(&cv.counts);
        Ok(())
    })
}

/// Normalized category profile: counts divided by their sum. Fails with
/// `Data` when no token falls in any category.
///
/// # Safety
/// As for [`cs_lexicon_count`], with `fractions` in place of `counts`.
#[no_mangle]
pub unsafe extern "C" fn cs_lexicon_profile(
    lexicon: *const CsLexicon,
    tokens: *const *const c_char,
    n_tokens: usize,
    fractions: *mut f64,
    fractions_len: usize,
) -> CsStatus {
    guard(|| {
        let l = handle(lexicon, "lexicon")?;
        let tokens = token_list(tokens, n_tokens)?;
        let out = output_buffer(fractions, fractions_len, l.lexicon.len())?;
        let cv = count_categories("", Source::Caption, &tokens, &l.lexicon);
        out.copy_from_slice(&normalize_vector(&cv)?.fractions);
        Ok(())
    })
}

/// # Safety
/// `lexicon` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cs_lexicon_free(lexicon: *mut CsLexicon) {
    if !lexicon.is_null() {
        drop(Box::from_raw(lexicon));
    }
}

// ---------------------------------------------------------------------------
// embeddings

fn embedding_handle(model: EmbeddingModel) -> *mut CsEmbedding {
    Box::into_raw(Box::new(CsEmbedding { model }))
}

/// Load a binary or text embedding model.
///
/// # Safety
/// `file` must be a NUL-terminated string; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cs_embedding_load(
    file: *const c_char,
    out: *mut *mut CsEmbedding,
) -> CsStatus {
    guard(|| {
        let model = embedding::load_any(&path(file, "file")?)?;
        put(out, embedding_handle(model), "out")
    })
}

/// Train skip-gram vectors on a text file with one whitespace-tokenized
/// sentence per line. Window 5, 5 negatives, learning rate 0.025,
/// min count 2, single-threaded, so the result depends only on the inputs.
///
/// # Safety
/// `file` must be a NUL-terminated string; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cs_embedding_train_file(
    file: *const c_char,
    dim: usize,
    epochs: usize,
    seed: u64,
    out: *mut *mut CsEmbedding,
) -> CsStatus {
    guard(|| {
        let file = path(file, "file")?;
        let text = std::fs::read_to_string(&file)
            .map_err(|e| Failure::new(CsStatus::Io, format!("{}: {e}", file.display())))?;
        let sentences: Vec<Vec<String>> = text
            .lines()
            .map(|l| l.split_whitespace().map(str::to_string).collect())
            .filter(|s: &Vec<String>| !s.is_empty())
            .collect();
        let config = SgnsConfig {
            dim,
            epochs,
            seed,
            ..SgnsConfig::default()
        };
        let model = embedding::train_sgns(&sentences, &config)?;
        put(out, embedding_handle(model), "out")
    })
}

/// Write the model in the binary format.
///
/// # Safety
/// `model` must be a live handle and `file` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cs_embedding_save(
    model: *const CsEmbedding,
    file: *const c_char,
) -> CsStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let file = path(file, "file")?;
        embedding::save_binary(&m.model, &file)
            .map_err(|e| Failure::new(CsStatus::Io, format!("{}: {e}", file.display())))
    })
}

/// Vector dimension, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_embedding_dim(model: *const CsEmbedding) -> usize {
    model.as_ref().map_or(0, |m| m.model.dim())
}

/// Vocabulary size, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_embedding_len(model: *const CsEmbedding) -> usize {
    model.as_ref().map_or(0, |m| m.model.len())
}

/// Cosine similarity of two words.
///
/// # Safety
/// `model` must be a live handle, the words NUL-terminated strings and `out`
/// valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cs_embedding_cosine(
    model: *const CsEmbedding,
    word_a: *const c_char,
    word_b: *const c_char,
    out: *mut f64,
) -> CsStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let c = m
            .model
            .cosine(text(word_a, "word_a")?, text(word_b, "word_b")?)?;
        put(out, c, "out")
    })
}

/// Copy a word's vector into `buf`, which must hold `cs_embedding_dim` values.
///
/// # Safety
/// `model` must be a live handle, `word` a NUL-terminated string and `buf`
/// valid for `buf_len` writes.
#[no_mangle]
pub unsafe extern "C" fn cs_embedding_vector(
    model: *const CsEmbedding,
    word: *const c_char,
    buf: *mut f32,
    buf_len: usize,
) -> CsStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let word = text(word, "word")?;
        let v = m.model.vector(word).ok_or_else(|| {
            Failure::from(EmbeddingError::OutOfVocabulary(vec![word.to_string()]))
        })?;
        output_buffer(buf, buf_len, v.len())?.copy_from_slice(v);
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cs_embedding_free(model: *mut CsEmbedding) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

// ---------------------------------------------------------------------------
// WEAT

/// Number of built-in specifications (immigrants, muslims, lgbt).
#[no_mangle]
pub extern "C" fn cs_weat_builtin_count() -> usize {
    weat::builtin_specs().len()
}

/// Built-in specification `index`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cs_weat_spec_builtin(index: usize, out: *mut *mut CsWeatSpec) -> CsStatus {
    guard(|| {
        let spec = weat::builtin_specs()
            .into_iter()
            .nth(index)
            .ok_or_else(|| {
                Failure::new(
                    CsStatus::InvalidArgument,
                    format!("no built-in spec {index}"),
                )
            })?;
        put(out, Box::into_raw(Box::new(CsWeatSpec { spec })), "out")
    })
}

/// Parse one specification from a JSON object with `name`, `class1`,
/// `class2`, `attrs1` and `attrs2`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cs_weat_spec_parse(
    json: *const c_char,
    out: *mut *mut CsWeatSpec,
) -> CsStatus {
    guard(|| {
        let line = text(json, "json")?.replace(['\n', '\r'], " ");
        let mut specs = weat::parse_specs(&line, Path::new("<json>"))?;
        if specs.len() != 1 {
            return Err(Failure::new(
                CsStatus::Parse,
                "expected exactly one specification",
            ));
        }
        put(
            out,
            Box::into_raw(Box::new(CsWeatSpec {
                spec: specs.remove(0),
            })),
            "out",
        )
    })
}

/// # Safety
/// `spec` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cs_weat_spec_free(spec: *mut CsWeatSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Run one WEAT with the exact permutation test.
///
/// # Safety
/// `model` and `spec` must be live handles and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cs_weat_run(
    model: *const CsEmbedding,
    spec: *const CsWeatSpec,
    policy: CsOovPolicy,
    comparison: CsComparison,
    out: *mut CsWeatResult,
) -> CsStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let s = handle(spec, "spec")?;
        non_null(out, "out")?;
        let policy = match policy {
            CsOovPolicy::Strict => OovPolicy::Strict,
            CsOovPolicy::Balance => OovPolicy::Balance,
        };
        let options = PermutationOptions {
            comparison: match comparison {
                CsComparison::Greater => Comparison::Greater,
                CsComparison::GreaterOrEqual => Comparison::GreaterOrEqual,
            },
            ..PermutationOptions::default()
        };
        let r = weat::run_weat(&m.model, &s.spec, policy, &options)?;
        put(
            out,
            CsWeatResult {
                statistic: r.statistic,
                effect_size: r.effect_size.unwrap_or(0.0),
                has_effect_size: r.effect_size.is_some(),
                p_value: r.p_value,
                partitions: r.partitions_evaluated,
                dropped: r.dropped.len(),
            },
            "out",
        )
    })
}

// ---------------------------------------------------------------------------
// statistics and pipeline

/// Box-plot summary (interpolated quartiles, 1.5 IQR whiskers) of `n` values.
///
/// # Safety
/// `values` must point to `n` readable values and `out` be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cs_summarize(
    values: *const f64,
    n: usize,
    out: *mut CsBoxStats,
) -> CsStatus {
    guard(|| {
        if n == 0 {
            return Err(Failure::new(CsStatus::InvalidArgument, "no values"));
        }
        non_null(values, "values")?;
        let s = pipeline::summarize_distribution(slice::from_raw_parts(values, n))
            .map_err(|e| Failure::new(CsStatus::Data, e))?;
        put(
            out,
            CsBoxStats {
                n: s.n,
                min: s.min,
                q1: s.q1,
                median: s.median,
                q3: s.q3,
                max: s.max,
                whisker_low: s.whisker_low,
                whisker_high: s.whisker_high,
                outliers: s.outliers.len(),
            },
            "out",
        )
    })
}

/// Full analysis from a run configuration file, writing the report, CSV
/// tables, models and manifest. `output_dir` may be null to use the
/// configured directory; `seed` may be null to use the configured seed.
///
/// # Safety
/// `config` must be a NUL-terminated string; `output_dir` null or one;
/// `seed` null or valid for one read.
#[no_mangle]
pub unsafe extern "C" fn cs_run_all(
    config: *const c_char,
    output_dir: *const c_char,
    seed: *const u64,
) -> CsStatus {
    guard(|| {
        let file = path(config, "config")?;
        let mut c = RunConfig::load(&file).map_err(|e| Failure::new(CsStatus::Config, e))?;
        if !output_dir.is_null() {
            c.output = path(output_dir, "output_dir")?;
        }
        if let Some(&s) = seed.as_ref() {
            c.seed = s;
        }
        pipeline::run_full_analysis(&c)?;
        Ok(())
    })
}
