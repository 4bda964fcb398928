/* tslint:disable */
/* eslint-disable */

/**
 * Power spectral density of one generated waveform.
 */
export class Psd {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly density_db: Float64Array;
    readonly freqs_hz: Float64Array;
    readonly obw_hz: number;
    readonly papr_db: number;
}

/**
 * Row-major dB magnitudes, `n_frames x n_bins`, lowest frequency first.
 */
export class SpectrogramView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly db: Float64Array;
    readonly n_bins: number;
    readonly n_frames: number;
    readonly sample_rate_hz: number;
}

/**
 * A GSM carrier and a 5 MHz LTE carrier sharing one 15.36 MHz band.
 * Offsets are relative to the band centre; the GSM power is relative to LTE.
 */
export function coexistence(gsm_offset_hz: number, lte_offset_hz: number, gsm_power_db: number, snr_db: number, seed: bigint): SpectrogramView;

/**
 * Envelope in dB of `n` samples of a fading process at 100 kHz. A finite
 * `k_factor_db` adds a line-of-sight component.
 */
export function fading_envelope(doppler_hz: number, k_factor_db: number | null | undefined, n: number, seed: bigint): Float64Array;

/**
 * Welch PSD, PAPR and 99% occupied bandwidth of a default-configured
 * `standard` ("gsm", "umts", "lte" or "nr") lasting `duration_ms`.
 */
export function waveform_psd(standard: string, duration_ms: number, seed: bigint): Psd;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_psd_free: (a: number, b: number) => void;
    readonly __wbg_spectrogramview_free: (a: number, b: number) => void;
    readonly coexistence: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
    readonly fading_envelope: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly psd_density_db: (a: number) => [number, number];
    readonly psd_freqs_hz: (a: number) => [number, number];
    readonly psd_obw_hz: (a: number) => number;
    readonly psd_papr_db: (a: number) => number;
    readonly spectrogramview_db: (a: number) => [number, number];
    readonly spectrogramview_n_bins: (a: number) => number;
    readonly spectrogramview_n_frames: (a: number) => number;
    readonly spectrogramview_sample_rate_hz: (a: number) => number;
    readonly waveform_psd: (a: number, b: number, c: number, d: bigint) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
