/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_psd_free: (a: number, b: number) => void;
export const __wbg_spectrogramview_free: (a: number, b: number) => void;
export const coexistence: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
export const fading_envelope: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
export const psd_density_db: (a: number) => [number, number];
export const psd_freqs_hz: (a: number) => [number, number];
export const psd_obw_hz: (a: number) => number;
export const psd_papr_db: (a: number) => number;
export const spectrogramview_db: (a: number) => [number, number];
export const spectrogramview_n_bins: (a: number) => number;
export const spectrogramview_n_frames: (a: number) => number;
export const spectrogramview_sample_rate_hz: (a: number) => number;
export const waveform_psd: (a: number, b: number, c: number, d: bigint) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
