/**
 * Pure state transitions for the chat demo.
 *
 * The transcript is append-only.  At most one suggest fetch is considered
 * live: sending bumps `requestId`, and a response (or error) is applied
 * only if it still carries the current id — stale responses are dropped.
 * Chip texts are used exactly as the service returned them.
 */

import { ChatTurn, Suggestion, UiState } from './types.js';

function append(state: UiState, turn: ChatTurn): UiState {
  return { ...state, transcript: [...state.transcript, turn] };
}

/** Incoming message from the other party; the caller fires the fetch with
 * the returned requestId. */
export function sendAsOther(state: UiState, text: string): UiState {
  if (!text.trim()) return state;
  const next = append(state, { sender: 'other', text, acceptedSuggestion: false });
  return {
    ...next,
    pendingSuggestions: [],
    fetchInflight: true,
    errorBanner: null,
    requestId: state.requestId + 1,
  };
}

/** Manual reply typed by the user; own turns get no suggestions. */
export function sendAsMe(state: UiState, text: string): UiState {
  if (!text.trim()) return state;
  const next = append(state, { sender: 'me', text, acceptedSuggestion: false });
  return { ...next, pendingSuggestions: [], fetchInflight: false };
}

/** Tap on chip `index`: its text becomes the next own turn. */
export function acceptSuggestion(state: UiState, index: number): UiState {
  const chip = state.pendingSuggestions[index];
  if (!chip) return state;
  const next = append(state, { sender: 'me', text: chip.text, acceptedSuggestion: true });
  return { ...next, pendingSuggestions: [] };
}

/** Successful suggest response; ignored when stale. */
export function applySuggestions(
  state: UiState,
  requestId: number,
  suggestions: Suggestion[],
): UiState {
  if (requestId !== state.requestId) return state;
  return { ...state, pendingSuggestions: suggestions, fetchInflight: false, errorBanner: null };
}

/** Failed suggest fetch; transcript stays intact. */
export function applyFetchError(state: UiState, requestId: number, message: string): UiState {
  if (requestId !== state.requestId) return state;
  return { ...state, pendingSuggestions: [], fetchInflight: false, errorBanner: message };
}
