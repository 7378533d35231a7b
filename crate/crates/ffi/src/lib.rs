//! C ABI for `astar-rec`.
//!
//! Every function returns an [`AstarRecStatus`]; outputs go through pointer
//! arguments. On failure a description is kept per thread and can be fetched with
//! [`astar_rec_last_error`]. Pairs are opaque handles created by one of the
//! `astar_rec_pair_*` constructors and released with [`astar_rec_pair_free`].
//! Panics never cross the boundary; they are reported as `ASTAR_REC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use astar_rec::bitstream::Message;
use astar_rec::coders::{decode, Code, CoderSpec, Variant};
use astar_rec::distributions::{Distribution1D, PairSpec};
use astar_rec::{isokl, Error};

/// Result of every call.
#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AstarRecStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidParameters = 3,
    AbsoluteContinuity = 4,
    UnboundedRatio = 5,
    DegenerateTarget = 6,
    BudgetExhausted = 7,
    InvalidCode = 8,
    MalformedMessage = 9,
    BufferTooSmall = 10,
    Infeasible = 11,
    Internal = 12,
    Panic = 13,
}

/// Coder family. Passed across the ABI as `uint32_t` so that out-of-range
/// values from C are rejected instead of being undefined behaviour.
#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AstarRecVariant {
    AsStar = 0,
    AdStar = 1,
    Pfr = 2,
    Dad = 3,
    Mrc = 4,
}

/// One encoded sample.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AstarRecCode {
    /// An [`AstarRecVariant`] value.
    pub variant: u32,
    /// Tree depth (AS*, AD*), bit length of the index (PFR) or bit budget (DAD*, MRC).
    pub depth_or_budget: u32,
    pub payload: u64,
}

/// Per-encode measurements.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AstarRecStats {
    pub steps: u64,
    pub returned_depth: u32,
    pub payload_bits: u32,
}

/// Opaque target/proposal pair.
pub struct AstarRecPair(PairSpec);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> AstarRecStatus {
    use AstarRecStatus as S;
    match err {
        Error::Domain(_) | Error::Constraint(_) | Error::DepthExceeded(_) => S::InvalidArgument,
        Error::InvalidParameters(_) | Error::DegenerateRegion => S::InvalidParameters,
        Error::AbsoluteContinuity => S::AbsoluteContinuity,
        Error::UnboundedRatio => S::UnboundedRatio,
        Error::DegenerateTarget => S::DegenerateTarget,
        Error::BudgetExhausted(_) => S::BudgetExhausted,
        Error::InvalidCode(_) => S::InvalidCode,
        Error::MalformedMessage(_) => S::MalformedMessage,
        Error::Infeasible(_) => S::Infeasible,
        Error::Unsupported => S::Internal,
    }
}

struct Failure(AstarRecStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail<T>(status: AstarRecStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

/// Runs `f`, records any error, and converts panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AstarRecStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            AstarRecStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            AstarRecStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().map_or_else(
        || fail(AstarRecStatus::NullPointer, format!("{name} is null")),
        Ok,
    )
}

unsafe fn pair_ref<'a>(p: *const AstarRecPair) -> Result<&'a PairSpec, Failure> {
    p.as_ref()
        .map(|p| &p.0)
        .map_or_else(|| fail(AstarRecStatus::NullPointer, "pair is null"), Ok)
}

fn parse_variant(v: u32) -> Result<AstarRecVariant, Failure> {
    Ok(match v {
        0 => AstarRecVariant::AsStar,
        1 => AstarRecVariant::AdStar,
        2 => AstarRecVariant::Pfr,
        3 => AstarRecVariant::Dad,
        4 => AstarRecVariant::Mrc,
        _ => {
            return fail(
                AstarRecStatus::InvalidArgument,
                format!("unknown variant {v}"),
            )
        }
    })
}

fn to_variant(v: AstarRecVariant) -> Variant {
    match v {
        AstarRecVariant::AsStar => Variant::AsStar,
        AstarRecVariant::AdStar => Variant::AdStar,
        AstarRecVariant::Pfr => Variant::Pfr,
        AstarRecVariant::Dad => Variant::Dad,
        AstarRecVariant::Mrc => Variant::Mrc,
    }
}

fn from_variant(v: Variant) -> AstarRecVariant {
    match v {
        Variant::AsStar => AstarRecVariant::AsStar,
        Variant::AdStar => AstarRecVariant::AdStar,
        Variant::Pfr => AstarRecVariant::Pfr,
        Variant::Dad => AstarRecVariant::Dad,
        Variant::Mrc => AstarRecVariant::Mrc,
    }
}

fn to_code(c: &AstarRecCode) -> Result<Code, Failure> {
    let variant = to_variant(parse_variant(c.variant)?);
    Ok(Code {
        variant,
        depth_or_budget: c.depth_or_budget,
        payload: c.payload,
    })
}

fn from_code(c: &Code) -> AstarRecCode {
    AstarRecCode {
        variant: from_variant(c.variant) as u32,
        depth_or_budget: c.depth_or_budget,
        payload: c.payload,
    }
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn astar_rec_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn astar_rec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn store_pair(pair: PairSpec, out_pair: *mut *mut AstarRecPair) -> Result<(), Failure> {
    let slot = unsafe { out(out_pair, "out_pair")? };
    *slot = Box::into_raw(Box::new(AstarRecPair(pair)));
    Ok(())
}

/// Gaussian target `N(target_mean, target_variance)` against a Gaussian proposal.
///
/// # Safety
/// `out_pair` must be a valid pointer; the handle written there must be released
/// with [`astar_rec_pair_free`].
#[no_mangle]
pub unsafe extern "C" fn astar_rec_pair_gaussian(
    target_mean: f64,
    target_variance: f64,
    proposal_mean: f64,
    proposal_variance: f64,
    out_pair: *mut *mut AstarRecPair,
) -> AstarRecStatus {
    guard(|| {
        let pair = PairSpec::new(
            Distribution1D::gaussian(target_mean, target_variance)?,
            Distribution1D::gaussian(proposal_mean, proposal_variance)?,
        )?;
        store_pair(pair, out_pair)
    })
}

/// Uniform target of the given centre and width inside a uniform proposal.
///
/// # Safety
/// As for [`astar_rec_pair_gaussian`].
#[no_mangle]
pub unsafe extern "C" fn astar_rec_pair_uniform(
    target_center: f64,
    target_width: f64,
    proposal_center: f64,
    proposal_width: f64,
    out_pair: *mut *mut AstarRecPair,
) -> AstarRecStatus {
    guard(|| {
        let pair = PairSpec::new(
            Distribution1D::uniform(target_center, target_width)?,
            Distribution1D::uniform(proposal_center, proposal_width)?,
        )?;
        store_pair(pair, out_pair)
    })
}

/// Any pair, from the JSON form `{"target": {...}, "proposal": {...}}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_pair` as for
/// [`astar_rec_pair_gaussian`].
#[no_mangle]
pub unsafe extern "C" fn astar_rec_pair_from_json(
    json: *const c_char,
    out_pair: *mut *mut AstarRecPair,
) -> AstarRecStatus {
    guard(|| {
        if json.is_null() {
            return fail(AstarRecStatus::NullPointer, "json is null");
        }
        let text = CStr::from_ptr(json).to_str().or_else(|e| {
            fail(
                AstarRecStatus::InvalidArgument,
                format!("json is not UTF-8: {e}"),
            )
        })?;
        let pair: PairSpec = serde_json::from_str(text)
            .or_else(|e| fail(AstarRecStatus::InvalidParameters, format!("pair JSON: {e}")))?;
        store_pair(pair, out_pair)
    })
}

/// Releases a pair handle. Null is ignored.
///
/// # Safety
/// `pair` must come from an `astar_rec_pair_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn astar_rec_pair_free(pair: *mut AstarRecPair) {
    if !pair.is_null() {
        drop(Box::from_raw(pair));
    }
}

/// `KL(Q || P)` in nats.
///
/// # Safety
/// `pair` must be a live handle and `out_kl` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn astar_rec_pair_kl(
    pair: *const AstarRecPair,
    out_kl: *mut f64,
) -> AstarRecStatus {
    guard(|| {
        *out(out_kl, "out_kl")? = pair_ref(pair)?.analytic_kl()?;
        Ok(())
    })
}

/// `D_inf(Q || P)` in nats (may be infinite).
///
/// # Safety
/// `pair` must be a live handle and `out_dinf` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn astar_rec_pair_dinf(
    pair: *const AstarRecPair,
    out_dinf: *mut f64,
) -> AstarRecStatus {
    guard(|| {
        *out(out_dinf, "out_dinf")? = pair_ref(pair)?.analytic_dinf();
        Ok(())
    })
}

/// Encodes one target sample.
///
/// `variant` is an [`AstarRecVariant`]. `param` is the bit budget for DAD* and MRC, the step limit for PFR (0 for the
/// default) and ignored for AS* and AD*. `out_stats` may be null.
///
/// # Safety
/// `pair` must be a live handle; `out_code` and `out_sample` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn astar_rec_encode(
    pair: *const AstarRecPair,
    variant: u32,
    param: u64,
    seed: u64,
    out_code: *mut AstarRecCode,
    out_sample: *mut f64,
    out_stats: *mut AstarRecStats,
) -> AstarRecStatus {
    guard(|| {
        let pair = pair_ref(pair)?;
        let budget = || {
            u32::try_from(param)
                .or_else(|_| fail(AstarRecStatus::InvalidArgument, format!("budget {param}")))
        };
        let coder = match parse_variant(variant)? {
            AstarRecVariant::AsStar => CoderSpec::AsStar,
            AstarRecVariant::AdStar => CoderSpec::AdStar,
            AstarRecVariant::Pfr => CoderSpec::Pfr {
                max_steps: if param == 0 {
                    astar_rec::coders::DEFAULT_PFR_MAX_STEPS
                } else {
                    param
                },
            },
            AstarRecVariant::Dad => CoderSpec::Dad { budget: budget()? },
            AstarRecVariant::Mrc => CoderSpec::Mrc { budget: budget()? },
        };
        let code_slot = out(out_code, "out_code")?;
        let sample_slot = out(out_sample, "out_sample")?;
        let e = coder.encode(pair, seed)?;
        *code_slot = from_code(&e.code);
        *sample_slot = e.sample;
        if let Some(stats) = out_stats.as_mut() {
            *stats = AstarRecStats {
                steps: e.stats.steps,
                returned_depth: e.stats.returned_depth,
                payload_bits: e.stats.payload_bits,
            };
        }
        Ok(())
    })
}

/// Recovers the sample of `code` using the pair's proposal and the shared seed.
///
/// # Safety
/// `pair` must be a live handle; `code` and `out_sample` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn astar_rec_decode(
    pair: *const AstarRecPair,
    code: *const AstarRecCode,
    seed: u64,
    out_sample: *mut f64,
) -> AstarRecStatus {
    guard(|| {
        let pair = pair_ref(pair)?;
        let code = code
            .as_ref()
            .map_or_else(|| fail(AstarRecStatus::NullPointer, "code is null"), Ok)?;
        *out(out_sample, "out_sample")? = decode(pair.proposal(), &to_code(code)?, seed)?;
        Ok(())
    })
}

/// Serializes `n` codes of one variant into a message.
///
/// DAD* and MRC codes must share a budget and are written as one block; the
/// other variants use per-symbol framing. `out_len` receives the required size
/// even when `cap` is too small (then `ASTAR_REC_STATUS_BUFFER_TOO_SMALL`).
///
/// # Safety
/// `codes` must point to `n` codes; `buf` to `cap` writable bytes (or be null
/// when `cap` is 0); `out_len` valid.
#[no_mangle]
pub unsafe extern "C" fn astar_rec_message_pack(
    codes: *const AstarRecCode,
    n: usize,
    buf: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> AstarRecStatus {
    guard(|| {
        let len_slot = out(out_len, "out_len")?;
        if n == 0 || codes.is_null() {
            return fail(AstarRecStatus::InvalidArgument, "need at least one code");
        }
        let codes: Vec<Code> = std::slice::from_raw_parts(codes, n)
            .iter()
            .map(to_code)
            .collect::<Result<_, _>>()?;
        let variant = codes[0].variant;
        let message = if variant.is_fixed_length() {
            Message::Blocks {
                variant,
                blocks: vec![codes],
            }
        } else {
            Message::PerSymbol { variant, codes }
        };
        let bytes = message.to_bytes()?;
        *len_slot = bytes.len();
        if bytes.len() > cap || buf.is_null() {
            return fail(
                AstarRecStatus::BufferTooSmall,
                format!("need {} bytes, have {cap}", bytes.len()),
            );
        }
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        Ok(())
    })
}

/// Parses a message into codes. `out_n` receives the number of codes even
/// when `cap` is too small.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out_codes` to `cap` writable
/// codes (or be null when `cap` is 0); `out_n` valid.
#[no_mangle]
pub unsafe extern "C" fn astar_rec_message_unpack(
    bytes: *const u8,
    len: usize,
    out_codes: *mut AstarRecCode,
    cap: usize,
    out_n: *mut usize,
) -> AstarRecStatus {
    guard(|| {
        let n_slot = out(out_n, "out_n")?;
        if bytes.is_null() {
            return fail(AstarRecStatus::NullPointer, "bytes is null");
        }
        let codes = Message::from_bytes(std::slice::from_raw_parts(bytes, len))?.codes();
        *n_slot = codes.len();
        if codes.len() > cap || (out_codes.is_null() && !codes.is_empty()) {
            return fail(
                AstarRecStatus::BufferTooSmall,
                format!("need {} codes, have {cap}", codes.len()),
            );
        }
        for (i, c) in codes.iter().enumerate() {
            *out_codes.add(i) = from_code(c);
        }
        Ok(())
    })
}

/// Principal branch of the Lambert W function, for `x >= -1/e`.
///
/// # Safety
/// `out_w` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn astar_rec_lambert_w0(x: f64, out_w: *mut f64) -> AstarRecStatus {
    guard(|| {
        *out(out_w, "out_w")? = isokl::lambert_w0(x)?;
        Ok(())
    })
}

/// Target variance with the given mean and KL `kappa` (nats) against `N(nu, rho^2)`.
///
/// # Safety
/// `out_variance` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn astar_rec_gaussian_from_mean_kl(
    nu: f64,
    rho: f64,
    mu: f64,
    kappa: f64,
    out_variance: *mut f64,
) -> AstarRecStatus {
    guard(|| {
        *out(out_variance, "out_variance")? = isokl::gaussian_from_mean_kl(nu, rho, mu, kappa)?;
        Ok(())
    })
}

/// Gaussian target against `N(0, 1)` with KL `k` and `D_inf` `r` (nats).
/// Writes the absolute mean and the variance.
///
/// # Safety
/// `out_mean` and `out_variance` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn astar_rec_gaussian_from_kl_dinf(
    k: f64,
    r: f64,
    out_mean: *mut f64,
    out_variance: *mut f64,
) -> AstarRecStatus {
    guard(|| {
        let mean = out(out_mean, "out_mean")?;
        let var = out(out_variance, "out_variance")?;
        (*mean, *var) = isokl::gaussian_from_kl_dinf(k, r)?;
        Ok(())
    })
}
