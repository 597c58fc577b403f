/** Personalized-message form: the dashboard's only write path.
 *
 * Pure state + transitions; the DOM layer renders from this. Submit is
 * disabled on empty text, errors surface inline, and a failed submit keeps
 * the typed text so nothing is lost.
 */

import { ApiClient, ApiError } from "./api.js";
import type { Message, MessageCategory } from "./types.js";
import { MESSAGE_CATEGORIES } from "./types.js";

export interface MessageFormState {
  participantId: string;
  category: MessageCategory;
  text: string;
  submitting: boolean;
  error: string | null;
  justAdded: string | null; // message_id of the last successful submit
  messages: Message[];
}

export function initialFormState(participantId: string, messages: Message[] = []): MessageFormState {
  return {
    participantId,
    category: MESSAGE_CATEGORIES[0],
    text: "",
    submitting: false,
    error: null,
    justAdded: null,
    messages,
  };
}

export function canSubmit(state: MessageFormState): boolean {
  return (
    !state.submitting &&
    state.text.trim().length > 0 &&
    (MESSAGE_CATEGORIES as readonly string[]).includes(state.category)
  );
}

export function withText(state: MessageFormState, text: string): MessageFormState {
  return { ...state, text, justAdded: null };
}

export function withCategory(state: MessageFormState, category: MessageCategory): MessageFormState {
  return { ...state, category, justAdded: null };
}

/** POST the message; on success it joins the list without a reload. */
export async function submitMessage(
  state: MessageFormState,
  api: ApiClient,
): Promise<MessageFormState> {
  if (!canSubmit(state)) {
    return { ...state, error: "enter a message and pick a category" };
  }
  const pending = { ...state, submitting: true, error: null };
  try {
    const message = await api.postMessage(state.participantId, state.category, state.text.trim());
    return {
      ...pending,
      submitting: false,
      text: "",
      justAdded: message.message_id,
      messages: [...pending.messages, message],
    };
  } catch (err) {
    const detail = err instanceof ApiError ? err.detail : String(err);
    // keep the typed text so the therapist can retry
    return { ...pending, submitting: false, error: detail };
  }
}

export function renderMessageForm(state: MessageFormState): string {
  const options = MESSAGE_CATEGORIES.map(
    (category) =>
      `<option value="${category}" ${category === state.category ? "selected" : ""}>${category.replace(/_/g, " ")}</option>`,
  ).join("");
  const personalized = state.messages.filter((m) => m.participant_scope === state.participantId);
  const items = personalized
    .map(
      (m) =>
        `<li class="${m.message_id === state.justAdded ? "fresh" : ""}" data-id="${m.message_id}">
         <span class="cat">${m.category.replace(/_/g, " ")}</span> ${escape_(m.text)}</li>`,
    )
    .join("\n");
  return `<section class="panel" id="message-form">
  <h2>Personalized messages</h2>
  <form>
    <select name="category" required>${options}</select>
    <textarea name="text" placeholder="e.g. But it was fun when you played cards with Joe at the clubhouse">${escape_(state.text)}</textarea>
    <button type="submit" ${canSubmit(state) ? "" : "disabled"}>Add message</button>
    ${state.error ? `<p class="inline-error" role="alert">${escape_(state.error)}</p>` : ""}
  </form>
  ${items ? `<ul class="message-list">${items}</ul>` : `<p class="empty">no personalized messages yet</p>`}
</section>`;
}

function escape_(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
