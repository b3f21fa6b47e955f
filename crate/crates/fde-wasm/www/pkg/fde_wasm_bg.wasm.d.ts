/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const homogeneous_log_modulus: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const mittag_leffler: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const s_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
export const zero_table: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
