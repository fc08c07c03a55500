/** Shared types for the chat demo; mirrors the service JSON contract. */

export type Sender = 'me' | 'other';

export interface ChatTurn {
  sender: Sender;
  text: string;
  /** true when the turn was sent by tapping a suggestion chip */
  acceptedSuggestion: boolean;
}

export interface Suggestion {
  text: string;
  score: number;
  intent_id: number;
}

export interface SuggestResponse {
  suggestions: Suggestion[];
  model_id: string;
  elapsed_ms: number;
}

export interface UiState {
  transcript: ChatTurn[];
  pendingSuggestions: Suggestion[];
  fetchInflight: boolean;
  errorBanner: string | null;
  /** id of the newest suggest request; older responses are stale */
  requestId: number;
}

export function initialState(): UiState {
  return {
    transcript: [],
    pendingSuggestions: [],
    fetchInflight: false,
    errorBanner: null,
    requestId: 0,
  };
}
